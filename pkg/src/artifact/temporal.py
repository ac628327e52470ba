"""Closed-form temporal statistics of one Raman mode with decoherence.

A mode pair couples at rate ``zeta`` and the spin wave decays at ``Gamma``
with Langevin noise; the net gain is ``gamma = zeta^2/2 - Gamma``. With
``mn = min(t, t')`` and the kernel ``phi(x) = (e^x - 1)/x``::

    <a+(t) a(t')> = zeta^2 e^{gamma(t+t')} + 2 zeta^2 Gamma e^{gamma|t-t'|} mn phi(2 gamma mn)
    <b+(t) b(t')> = zeta^2 e^{gamma|t-t'|} mn phi(2 gamma mn)
    <b(t) a(t')>  = <a+(t) a(t')> / zeta

These equal the usual ``1/gamma`` expressions but stay finite and smooth
through ``gamma = 0``.
"""

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import exprel


class Regime(enum.Enum):
    SUBCRITICAL = "subcritical"
    CRITICAL = "critical"
    SUPERCRITICAL = "supercritical"


@dataclass(frozen=True)
class TemporalParams:
    zeta: float
    gamma_loss: float = 0.0

    def __post_init__(self):
        if self.zeta < 0 or self.gamma_loss < 0:
            raise ValueError("zeta and gamma_loss must be non-negative")

    @property
    def gamma_net(self):
        return self.zeta**2 / 2 - self.gamma_loss


def _phi2(x):
    # (e^x - 1 - x) / x^2 with a series near zero
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < 0.5
    xs = x[small]
    term = np.full_like(xs, 0.5)
    acc = term.copy()
    for n in range(3, 20):
        term = term * xs / n
        acc += term
    out[small] = acc
    xl = x[~small]
    out[~small] = (np.expm1(xl) - xl) / xl**2
    return out


def _times(t, tp):
    t = np.asarray(t, dtype=float)
    tp = np.asarray(tp, dtype=float)
    if np.any(t < 0) or np.any(tp < 0):
        raise ValueError("times must be non-negative")
    return t, tp, np.minimum(t, tp), np.abs(t - tp)


def corr_bb(p, t, tp):
    """Spin-wave correlation ``<b+(t) b(t')>``."""
    t, tp, mn, d = _times(t, tp)
    g = p.gamma_net
    return (p.zeta**2 * np.exp(g * d) * mn * exprel(2 * g * mn))[()]


def corr_aa(p, t, tp):
    """Photon flux correlation ``<a+(t) a(t')>`` of the output field."""
    t, tp, mn, d = _times(t, tp)
    g = p.gamma_net
    z2 = p.zeta**2
    return (z2 * np.exp(g * (t + tp)) + 2 * z2 * p.gamma_loss * np.exp(g * d) * mn * exprel(2 * g * mn))[()]


def corr_ba(p, t, tp):
    """Anomalous correlation ``<b(t) a(t')>``."""
    if p.zeta == 0:
        t, tp, _, _ = _times(t, tp)
        return np.zeros(np.broadcast(t, tp).shape)[()]
    t, tp, mn, d = _times(t, tp)
    g = p.gamma_net
    return (p.zeta * np.exp(g * (t + tp)) + 2 * p.zeta * p.gamma_loss * np.exp(g * d) * mn * exprel(2 * g * mn))[()]


def cumulative_photons(p, t):
    """Photons emitted up to ``t``: the integral of ``<a+ a>`` over ``[0, t]``.

    ``zeta^2 t phi(2 gamma t) + 2 zeta^2 Gamma t^2 phi2(2 gamma t)`` with
    ``phi2(x) = (e^x - 1 - x)/x^2``; equals ``e^{zeta^2 t} - 1`` when
    ``Gamma = 0``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("times must be non-negative")
    g = p.gamma_net
    z2 = p.zeta**2
    return (z2 * t * exprel(2 * g * t) + 2 * z2 * p.gamma_loss * t**2 * _phi2(2 * g * t))[()]


def g1(p, t, tp):
    """Normalized first-order coherence of the Stokes field."""
    t, tp, _, _ = _times(t, tp)
    if p.zeta == 0 or np.any(t * tp == 0):
        raise ValueError("g1 is undefined for zeta = 0 or zero times")
    c = corr_aa(p, t, tp)
    out = c / np.sqrt(corr_aa(p, t, t) * corr_aa(p, tp, tp))
    return np.where(t == tp, 1.0, out)[()]


def classify(p):
    """Compare pair creation against loss: ``Gamma`` versus ``zeta^2/2``."""
    half = p.zeta**2 / 2
    if p.gamma_loss < half:
        return Regime.SUBCRITICAL
    if p.gamma_loss == half:
        return Regime.CRITICAL
    return Regime.SUPERCRITICAL

"""Experimental regimes and their reduction to dimensionless parameters.

Two regimes are supported:

* ``COLD`` (a): Gaussian cold-atom cloud, uniform pump.
* ``VAPOR`` (b): uniform vapor cell of length ``L``, Gaussian pump.

Fixing the Laguerre-Gauss width to ``w = sqrt(sigma_z / k_s)`` makes the
reduced coupling depend only on the Fresnel number ``F``, the regime and
``kappa``.
"""

import enum
from dataclasses import dataclass

import numpy as np
from scipy import constants


class Regime(enum.Enum):
    COLD = "a"
    VAPOR = "b"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"a": cls.COLD, "cold": cls.COLD, "coldgaussiancloud": cls.COLD,
                   "b": cls.VAPOR, "vapor": cls.VAPOR, "uniformcellgaussianpump": cls.VAPOR}
        if key not in aliases:
            raise ValueError(f"unknown regime {value!r}")
        return aliases[key]


def regime_factor(regime, V=None, sigma=None, sigma_z=None):
    """Regime-dependent density factor multiplying the singular values."""
    if Regime.parse(regime) is Regime.VAPOR:
        return 1.0
    return np.sqrt((2.0 / np.pi) ** 1.5 * V / (sigma**2 * sigma_z))


def assemble_prefactor(regime, g0, lambda_s, n, I0, V=None, sigma=None, sigma_z=None):
    """Coupling scale ``g0 lambda_s^2 / hbar * sqrt(n I0 / eps0)`` times the regime factor.

    Parameters
    ----------
    regime : Regime or str
    g0 : float
        Raman coupling constant.
    lambda_s : float
        Stokes wavelength (m).
    n : float
        Atomic density (m^-3).
    I0 : float
        Pump intensity.
    V, sigma, sigma_z : float, optional
        Probe volume and cloud widths, required for the cold-cloud regime.
    """
    base = g0 * lambda_s**2 / constants.hbar * np.sqrt(n * I0 / constants.epsilon_0)
    regime = Regime.parse(regime)
    if regime is Regime.COLD and None in (V, sigma, sigma_z):
        raise ValueError("cold-cloud prefactor needs V, sigma and sigma_z")
    return base * regime_factor(regime, V, sigma, sigma_z)


@dataclass(frozen=True)
class ExperimentGeometry:
    """Physical sample and pump parameters.

    ``sigma`` is the cloud radius (a) or pump waist (b); ``sigma_z`` is the
    cloud length (a) or cell length ``L`` (b). ``kappa = k_s / k_p`` is forced
    to zero for (a) and defaults to one for (b).
    """

    regime: Regime
    sigma: float
    sigma_z: float
    k_s: float
    kappa: float | None = None
    coupling_prefactor: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime.parse(self.regime))
        if not (self.sigma > 0 and self.sigma_z > 0 and self.k_s > 0):
            raise ValueError("sigma, sigma_z and k_s must be positive")
        if self.regime is Regime.COLD:
            if self.kappa not in (None, 0, 0.0):
                raise ValueError("kappa must be 0 for the cold-cloud regime")
            object.__setattr__(self, "kappa", 0.0)
        else:
            kappa = 1.0 if self.kappa is None else float(self.kappa)
            if not 0 < kappa <= 2:
                raise ValueError("kappa must lie in (0, 2] for the vapor regime")
            object.__setattr__(self, "kappa", kappa)

    @classmethod
    def from_fresnel(cls, regime, fresnel, kappa=None, k_s=1.0, sigma_z=1.0, coupling_prefactor=1.0):
        """Geometry with the requested Fresnel number at unit length scales."""
        sigma = np.sqrt(2 * np.pi * fresnel * sigma_z / k_s)
        return cls(Regime.parse(regime), sigma, sigma_z, k_s, kappa, coupling_prefactor)


@dataclass(frozen=True)
class ReducedGeometry:
    fresnel: float
    chi: float
    waist: float
    kappa: float
    regime: Regime
    z_range: tuple
    sigma_z: float = 1.0
    k_s: float = 1.0

    def check_z(self, z_tilde):
        z = np.asarray(z_tilde, dtype=float)
        lo, hi = self.z_range
        if np.any(z < lo - 1e-12) or np.any(z > hi + 1e-12):
            raise ValueError(f"z_tilde outside {self.z_range}")
        return z


def fresnel_number(geom):
    """``F = k_s sigma^2 / (2 pi sigma_z)``."""
    return geom.k_s * geom.sigma**2 / (2 * np.pi * geom.sigma_z)


def reduce(geom):
    """Reduce a physical geometry with the LG width ``w = sqrt(sigma_z/k_s)``."""
    waist = np.sqrt(geom.sigma_z / geom.k_s)
    F = fresnel_number(geom)
    z_range = (-3.0, 3.0) if geom.regime is Regime.COLD else (-0.5, 0.5)
    return ReducedGeometry(fresnel=F, chi=2 * np.pi * F, waist=waist, kappa=geom.kappa,
                           regime=geom.regime, z_range=z_range,
                           sigma_z=geom.sigma_z, k_s=geom.k_s)


def reduced(regime, fresnel, kappa=None):
    """Shortcut: reduced geometry directly from ``(regime, F, kappa)``."""
    return reduce(ExperimentGeometry.from_fresnel(regime, fresnel, kappa))


def pump_curvature(red, z_tilde):
    """Pump wavefront parameter ``xi``: 0 for (a), ``kappa z / (pi F)`` for (b)."""
    z = red.check_z(z_tilde)
    if red.regime is Regime.COLD:
        return np.zeros_like(z)[()]
    return (red.kappa * z / (np.pi * red.fresnel))[()]


def axial_profile(red, z_tilde):
    """Reduced axial weight: ``exp(-z^2)`` for (a), 1 for (b)."""
    z = red.check_z(z_tilde)
    if red.regime is Regime.COLD:
        return np.exp(-z**2)[()]
    return np.ones_like(z)[()]


def physical_singular_value(red, geom, zeta_reduced):
    """Scale a reduced singular value by the geometry's coupling prefactor."""
    if np.any(np.asarray(zeta_reduced) < 0):
        raise ValueError("reduced singular values are non-negative")
    return (np.asarray(zeta_reduced, dtype=float) * geom.coupling_prefactor)[()]

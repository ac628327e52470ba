"""Special functions for the Laguerre-Gauss coupling pipeline.

All routines broadcast over their array arguments with numpy rules.
"""

import numpy as np
from scipy.special import gammaln


def laguerre_assoc(l, m, x):
    """Generalized Laguerre polynomial :math:`L_l^m(x)`.

    Evaluated with the upward three-term recurrence in ``l``.

    Parameters
    ----------
    l, m : int
        Degree and order, both non-negative.
    x : array_like
        Real argument.

    Returns
    -------
    float or ndarray
    """
    l, m = int(l), int(m)
    if l < 0 or m < 0:
        raise ValueError("l and m must be non-negative")
    x = np.asarray(x, dtype=float)
    return laguerre_table(l, m, x)[l]


def laguerre_table(l_max, m, x):
    """Stack of :math:`L_l^m(x)` for ``l = 0..l_max`` along axis 0."""
    x = np.asarray(x, dtype=float)
    out = np.empty((l_max + 1,) + x.shape)
    out[0] = 1.0
    if l_max >= 1:
        out[1] = 1.0 + m - x
    for l in range(1, l_max):
        out[l + 1] = ((2 * l + 1 + m - x) * out[l] - (l + m) * out[l - 1]) / (l + 1)
    return out


def hyp2f1_terminating(l, lp, m, zarg, scale=1.0):
    r"""Terminating Gauss series :math:`{}_2F_1(-l, -l'; m+1; z)`.

    The sum has ``min(l, lp) + 1`` terms. With ``scale = s`` the routine
    returns :math:`s^{l+l'}\,{}_2F_1(-l,-l';m+1;z)` with every term formed as
    :math:`c_k (z s^2)^k s^{l+l'-2k}`, which keeps the terms bounded when
    ``|z s^2| <= 1`` and ``|s| <= 1`` even for very large ``l``.

    Parameters
    ----------
    l, lp : int or array_like of int
        Non-negative upper parameters (negated in the series).
    m : int
        Non-negative; the lower parameter is ``m + 1``.
    zarg : complex or array_like
    scale : complex or array_like, optional

    Returns
    -------
    complex or ndarray
    """
    l = np.asarray(l, dtype=int)
    lp = np.asarray(lp, dtype=int)
    if np.any(l < 0) or np.any(lp < 0) or m < 0:
        raise ValueError("l, lp and m must be non-negative")
    zarg = np.asarray(zarg, dtype=complex)
    scale = np.asarray(scale, dtype=complex)
    y = zarg * scale**2
    kmax = int(np.max(np.minimum(l, lp))) if l.size and lp.size else 0
    ltot = l + lp
    coef = np.ones(np.broadcast(l, lp).shape)
    total = coef * scale**ltot * np.ones_like(y)
    yk = np.ones_like(y)
    for k in range(kmax):
        # ratio of successive coefficients; vanishes past min(l, lp)
        coef = coef * ((k - l) * (k - lp)) / ((m + 1 + k) * (k + 1))
        yk = yk * y
        total = total + coef * yk * scale ** np.maximum(ltot - 2 * (k + 1), 0)
    return total[()] if total.ndim == 0 else total


def binom_sqrt(n, k):
    """Square root of the binomial coefficient, computed in log space."""
    return np.exp(0.5 * (gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)))


def lg_norm(l, m):
    """Normalization ``sqrt(l!/(m+l)!)`` without factorial overflow."""
    return np.exp(0.5 * (gammaln(l + 1) - gammaln(l + m + 1)))


def lg_mode(l, m, rho, z, waist, k_s):
    r"""Radial-axial Laguerre-Gauss factor :math:`\mathrm{LG}_l^m(\rho, z)`.

    The azimuthal factor :math:`e^{im\varphi}` is left to the caller.

    Parameters
    ----------
    l, m : int
        Radial and (non-negative) azimuthal indices.
    rho, z : array_like
        Radial and axial coordinates in physical length units.
    waist : float
        Beam width parameter ``w``.
    k_s : float
        Wavenumber.

    Returns
    -------
    complex or ndarray
    """
    if waist <= 0 or k_s <= 0:
        raise ValueError("waist and k_s must be positive")
    if l < 0 or m < 0:
        raise ValueError("l and m must be non-negative")
    rho = np.asarray(rho, dtype=float)
    z = np.asarray(z, dtype=float)
    xs = 2.0 * z / (k_s * waist**2)
    rs = np.sqrt(2.0) * rho / (waist * np.sqrt(1.0 + xs**2))
    # (1 - i xs)^p / (1 + i xs)^(p+1) with p = l + m/2, as modulus and angle
    p = l + 0.5 * m
    phase = np.exp(-1j * (2 * p + 1) * np.arctan(xs)) / np.sqrt(1.0 + xs**2)
    gauss = np.exp(-rho**2 / (waist**2 * (1.0 + 1j * xs)))
    norm = np.sqrt(2.0 / np.pi) * lg_norm(l, m) / waist
    return norm * phase * rs**m * gauss * laguerre_assoc(l, m, rs**2)


def lg_table(l_max, m, rho, z, waist, k_s):
    """:func:`lg_mode` for ``l = 0..l_max`` stacked along axis 0."""
    if waist <= 0 or k_s <= 0:
        raise ValueError("waist and k_s must be positive")
    rho = np.asarray(rho, dtype=float)
    z = np.asarray(z, dtype=float)
    xs = 2.0 * z / (k_s * waist**2)
    rs = np.sqrt(2.0) * rho / (waist * np.sqrt(1.0 + xs**2))
    l = np.arange(l_max + 1).reshape((-1,) + (1,) * rs.ndim)
    phase = np.exp(-1j * (2 * l + m + 1) * np.arctan(xs)) / np.sqrt(1.0 + xs**2)
    gauss = np.exp(-rho**2 / (waist**2 * (1.0 + 1j * xs)))
    norm = np.sqrt(2.0 / np.pi) * lg_norm(l, m) / waist
    return norm * phase * rs**m * gauss * laguerre_table(l_max, m, rs**2)

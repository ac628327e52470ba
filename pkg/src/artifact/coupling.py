"""Reduced coupling matrix elements in the Laguerre-Gauss basis.

The closed form is evaluated in a ratio form that cannot overflow. With
``a = 1 + i xi``, ``D = 1 + 2 a chi + xs^2`` and ``r = (1 + xs^2) / D``::

    h = Z (2 chi a / D)^(m+1) sqrt(C(m+l, l) C(m+l', l'))
          exp(-2i (l'-l) atan xs) sum_k c_k (2 chi a / D)^(2k) r^(l+l'-2k)

where ``c_k`` are the coefficients of 2F1(-l, -l'; m+1; .). Both
``|2 chi a / D|`` and ``|r|`` are at most one.
"""

from dataclasses import dataclass

import numpy as np

from .geometry import axial_profile, pump_curvature
from .specfun import binom_sqrt, hyp2f1_terminating, lg_mode, lg_table


@dataclass(frozen=True)
class CouplingBlock:
    """``elements[l, l', j] = h^m_{l;l'}(z_j)`` for one azimuthal index."""

    m: int
    l_max: int
    z_nodes: np.ndarray
    z_weights: np.ndarray
    elements: np.ndarray

    def __post_init__(self):
        n = self.l_max + 1
        if self.elements.shape != (n, n, len(self.z_nodes)):
            raise ValueError("inconsistent block dimensions")
        if np.any(self.z_weights <= 0):
            raise ValueError("quadrature weights must be positive")
        if not np.all(np.isfinite(self.elements)):
            raise FloatingPointError("non-finite coupling element")


def _closed_form(red, m, l, lp, z):
    # l, lp, z broadcast against each other
    m = abs(int(m))
    z = np.asarray(z, dtype=float)
    xi = pump_curvature(red, z)
    xs = 2.0 * z
    a = 1.0 + 1j * xi
    D = 1.0 + 2.0 * a * red.chi + xs**2
    u = 2.0 * red.chi * a / D
    r = (1.0 + xs**2) / D
    series = hyp2f1_terminating(l, lp, m, (2.0 * red.chi * a / (1.0 + xs**2)) ** 2, scale=r)
    phase = np.exp(-2j * (np.asarray(lp) - np.asarray(l)) * np.arctan(xs))
    binom = binom_sqrt(m + np.asarray(l), np.asarray(l)) * binom_sqrt(m + np.asarray(lp), np.asarray(lp))
    return axial_profile(red, z) * u ** (m + 1) * binom * phase * series


def coupling_element(red, m, l, lp, z_tilde):
    """Closed-form reduced matrix element ``h^m_{l;l'}(z)``.

    Parameters
    ----------
    red : ReducedGeometry
    m : int
        Azimuthal index; the element depends on ``|m|`` only.
    l, lp : int
        Radial indices of the photonic and atomic LG modes.
    z_tilde : float or array_like
        Reduced axial coordinate(s) inside ``red.z_range``.

    Returns
    -------
    complex or ndarray
    """
    if np.any(np.asarray(l) < 0) or np.any(np.asarray(lp) < 0):
        raise ValueError("radial indices must be non-negative")
    return np.asarray(_closed_form(red, m, l, lp, z_tilde))[()]


def coupling_element_quadrature(red, m, l, lp, z_tilde, n=200, tol=1e-10, full_output=False):
    """Radial overlap integral ``2 pi int rho LG_l^m* P LG_l'^m`` by quadrature.

    ``P = exp(-rho^2 / (sigma^2 (1 + i xi)))`` is the pump/density factor.
    Gauss-Legendre with ``n`` and ``2n`` nodes on a truncated radial domain;
    the two estimates must agree to ``tol`` times the integral of the
    absolute integrand.

    Returns
    -------
    value : complex
    abs_integral : float
        Only when ``full_output``; the roundoff scale of the integral.
    """
    z_tilde = float(red.check_z(z_tilde))
    m = abs(int(m))
    w, k_s = red.waist, red.k_s
    z = z_tilde * red.sigma_z
    xs = 2.0 * z / (k_s * w**2)
    xi = float(pump_curvature(red, z_tilde))
    sigma2 = red.chi * w**2
    R = w * np.sqrt(1.0 + xs**2) * (8.0 + 1.5 * np.sqrt(l + lp + m + 1.0))

    def integrate(npts):
        x, wt = np.polynomial.legendre.leggauss(npts)
        rho = 0.5 * R * (x + 1.0)
        f = (np.conj(lg_mode(l, m, rho, z, w, k_s))
             * np.exp(-rho**2 / (sigma2 * (1.0 + 1j * xi)))
             * lg_mode(lp, m, rho, z, w, k_s)) * rho
        scale = 0.5 * R * 2 * np.pi
        return scale * np.sum(wt * f), scale * np.sum(wt * np.abs(f))

    v1, _ = integrate(n)
    v2, mag = integrate(2 * n)
    if abs(v1 - v2) > tol * max(mag, 1e-300):
        raise ArithmeticError(f"radial quadrature did not reach tolerance {tol}")
    prof = float(axial_profile(red, z_tilde))
    value = complex(prof * v2)
    if full_output:
        return value, prof * mag
    return value


def coupling_matrix_quadrature(red, m, l_max, z_tilde, n=200, tol=1e-10, dps=None):
    """Quadrature oracle for all ``l, l' <= l_max`` at one axial position.

    Vectorized counterpart of :func:`coupling_element_quadrature`.

    Off-diagonal elements can be many orders of magnitude below the size of
    the integrand (they come from near-orthogonality), so double-precision
    quadrature only resolves them to about ``1e-16`` of ``abs_integrals``.
    Passing ``dps`` switches to composite Gauss-Legendre in ``mpmath`` at
    that many decimal digits, which resolves every element to full
    relative precision.

    Returns
    -------
    values : ndarray, shape (l_max+1, l_max+1)
    abs_integrals : ndarray, same shape
        Integral of the absolute integrand (roundoff scale per element);
        ``None`` on the extended-precision path.
    """
    if dps is not None:
        return _matrix_quadrature_mp(red, m, l_max, z_tilde, dps), None
    z_tilde = float(red.check_z(z_tilde))
    m = abs(int(m))
    w, k_s = red.waist, red.k_s
    z = z_tilde * red.sigma_z
    xs = 2.0 * z / (k_s * w**2)
    xi = float(pump_curvature(red, z_tilde))
    sigma2 = red.chi * w**2
    R = w * np.sqrt(1.0 + xs**2) * (8.0 + 1.5 * np.sqrt(2 * l_max + m + 1.0))

    def integrate(npts):
        x, wt = np.polynomial.legendre.leggauss(npts)
        rho = 0.5 * R * (x + 1.0)
        G = lg_table(l_max, m, rho, z, w, k_s)
        p = np.exp(-rho**2 / (sigma2 * (1.0 + 1j * xi))) * rho * wt * np.pi * R
        return (G.conj() * p) @ G.T, (np.abs(G) * np.abs(p)) @ np.abs(G).T

    v1, _ = integrate(n)
    v2, mag = integrate(2 * n)
    if np.any(np.abs(v1 - v2) > tol * mag):
        raise ArithmeticError(f"radial quadrature did not reach tolerance {tol}")
    prof = float(axial_profile(red, z_tilde))
    return prof * v2, prof * mag


def _matrix_quadrature_mp(red, m, l_max, z_tilde, dps, panels=10, span=140):
    import mpmath

    z_tilde = float(red.check_z(z_tilde))
    m = abs(int(m))
    ctx = mpmath.mp.clone()
    ctx.dps = dps
    # 48-point Gauss-Legendre rule on [-1, 1]
    rule = mpmath.calculus.quadrature.GaussLegendre(ctx).calc_nodes(5, ctx.prec)
    xs = ctx.mpf(2 * z_tilde)
    xi = ctx.mpf(float(pump_curvature(red, z_tilde)))
    # in s = rho_s^2 the integrand is s^m L_l(s) L_l'(s) exp(-beta s)
    beta = 1 + (1 + xs**2) / (2 * ctx.mpf(red.chi) * ctx.mpc(1, xi))
    h = span / ctx.re(beta) / panels
    acc = [[ctx.mpc(0)] * (l_max + 1) for _ in range(l_max + 1)]
    for p in range(panels):
        for x, wt in rule:
            s = h * (p + (x + 1) / 2)
            ws = wt * h / 2 * s**m * ctx.exp(-beta * s)
            lag = [ctx.mpf(1), 1 + m - s]
            for l in range(1, l_max):
                lag.append(((2 * l + 1 + m - s) * lag[l] - (l + m) * lag[l - 1]) / (l + 1))
            for l in range(l_max + 1):
                wl = ws * lag[l]
                row = acc[l]
                for lp in range(l, l_max + 1):
                    row[lp] += wl * lag[lp]
    out = np.empty((l_max + 1, l_max + 1), dtype=complex)
    gouy = ctx.atan(xs)
    for l in range(l_max + 1):
        for lp in range(l, l_max + 1):
            norm = ctx.sqrt(ctx.factorial(l) / ctx.factorial(l + m)
                            * ctx.factorial(lp) / ctx.factorial(lp + m))
            out[l, lp] = complex(acc[l][lp] * norm * ctx.expj(-2 * (lp - l) * gouy))
            out[lp, l] = complex(acc[l][lp] * norm * ctx.expj(2 * (lp - l) * gouy))
    return out * float(axial_profile(red, z_tilde))


def axial_grid(red, n_z, kind="gouy"):
    """Axial quadrature nodes and weights over ``red.z_range``.

    ``kind="gouy"`` places Gauss-Legendre nodes uniformly in the Gouy angle
    ``theta = atan(2 z)`` and carries the Jacobian in the weights; this
    resolves the phase winding of the elements near the cloud ends much
    better than ``kind="legendre"`` (plain Gauss-Legendre in ``z``).
    """
    if n_z < 3:
        raise ValueError("n_z must be at least 3")
    x, wt = np.polynomial.legendre.leggauss(n_z)
    z0, z1 = red.z_range
    if kind == "legendre":
        return 0.5 * (z1 - z0) * x + 0.5 * (z1 + z0), 0.5 * (z1 - z0) * wt
    if kind != "gouy":
        raise ValueError(f"unknown axial grid {kind!r}")
    t0, t1 = np.arctan(2 * z0), np.arctan(2 * z1)
    theta = 0.5 * (t1 - t0) * x + 0.5 * (t1 + t0)
    return 0.5 * np.tan(theta), 0.5 * (t1 - t0) * wt / (2 * np.cos(theta) ** 2)


def build_block(red, m, l_max=40, n_z=41, grid="gouy", profile_scale=1.0):
    """Assemble the coupling tensor for azimuthal index ``m``.

    Parameters
    ----------
    red : ReducedGeometry
    m : int
    l_max : int
        Largest radial index kept.
    n_z : int
        Number of axial nodes.
    grid : {"gouy", "legendre"}
        Axial node placement, see :func:`axial_grid`.
    profile_scale : float
        Multiplies every element; zero switches the coupling off.

    Returns
    -------
    CouplingBlock
    """
    if l_max < 0:
        raise ValueError("l_max must be non-negative")
    z, wz = axial_grid(red, n_z, grid)
    idx = np.arange(l_max + 1)
    H = _closed_form(red, m, idx[:, None, None], idx[None, :, None], z[None, None, :])
    H = np.ascontiguousarray(H * profile_scale, dtype=complex)
    return CouplingBlock(m=int(m), l_max=int(l_max), z_nodes=z, z_weights=wz, elements=H)

"""Weighted singular value decomposition of the coupling tensor.

For each azimuthal index ``m`` the tensor ``h[l, l', z_j]`` is flattened to a
matrix with rows ``l`` (photon) and columns ``(l', j)`` (atom) and the columns
are scaled by ``sqrt(w_j)`` so that discrete singular triplets approximate the
continuous Schmidt decomposition::

    h[l, l', z_j] = sum_k zeta_k c_ph[k, l] c_at[k, l', j]

Modes with azimuthal index ``-m`` share the spectrum of ``+m`` because the
elements depend on ``|m|`` only; only ``m >= 0`` is computed.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.interpolate import BarycentricInterpolator

from .geometry import physical_singular_value
from .specfun import lg_table


@dataclass(frozen=True)
class ModeDecomposition:
    m: int
    singular_values: np.ndarray
    photon_coeffs: np.ndarray  # [k, l]
    atomic_coeffs: np.ndarray  # [k, l', j]
    z_nodes: np.ndarray
    z_weights: np.ndarray

    @property
    def n_modes(self):
        return len(self.singular_values)

    def reconstruct(self):
        """Tensor ``sum_k zeta_k c_ph[k, l] c_at[k, l', j]``."""
        return np.einsum("k,kl,kpj->lpj", self.singular_values, self.photon_coeffs, self.atomic_coeffs)


def _gauge(c_ph, m):
    # phase that makes the reference coefficient real-positive
    ref = c_ph.sum(axis=1) if m == 0 else np.zeros(len(c_ph), dtype=complex)
    lead = c_ph[np.arange(len(c_ph)), np.argmax(np.abs(c_ph), axis=1)]
    small = np.abs(ref) < 1e-8 * np.abs(lead)
    ref = np.where(small, lead, ref)
    return np.exp(-1j * np.angle(ref))


def decompose(block):
    """SVD of a :class:`~artifact.coupling.CouplingBlock`.

    The overall phase of each mode is fixed so that the on-axis photonic
    amplitude (``sum_l c_ph[k, l]``, proportional to ``psi_ph(0, 0)``) is
    real-positive for ``m = 0``; for ``m > 0`` the largest-modulus photonic
    coefficient is made real-positive. The atomic coefficients carry the
    inverse phase so the product is unchanged.

    Returns
    -------
    ModeDecomposition
    """
    n_l = block.l_max + 1
    n_z = len(block.z_nodes)
    sw = np.sqrt(block.z_weights)
    M = (block.elements * sw).reshape(n_l, n_l * n_z)
    try:
        U, s, Vh = scipy.linalg.svd(M, full_matrices=False, lapack_driver="gesdd")
    except (np.linalg.LinAlgError, ValueError) as exc:
        try:
            U, s, Vh = scipy.linalg.svd(M, full_matrices=False, lapack_driver="gesvd")
        except (np.linalg.LinAlgError, ValueError):
            raise np.linalg.LinAlgError(f"SVD of the m={block.m} block failed: {exc}") from exc
    c_ph = U.T.copy()
    c_at = Vh.reshape(-1, n_l, n_z) / sw
    ph = _gauge(c_ph, block.m)
    c_ph *= ph[:, None]
    c_at *= ph.conj()[:, None, None]
    return ModeDecomposition(m=block.m, singular_values=s, photon_coeffs=c_ph, atomic_coeffs=c_at,
                             z_nodes=block.z_nodes.copy(), z_weights=block.z_weights.copy())


def _check_k(dec, k):
    if not 0 <= k < dec.n_modes:
        raise IndexError(f"mode index {k} out of range for {dec.n_modes} modes")


def photon_mode_eval(dec, k, rho, z, red):
    """Photonic envelope ``psi_ph_k(rho, z) = sum_l c_ph[k, l] LG_l^m(rho, z)``.

    ``rho`` and ``z`` are in the physical length units of ``red``; the
    carriers ``exp(i k_s z) exp(i m phi)`` are not included.
    """
    _check_k(dec, k)
    G = lg_table(dec.photon_coeffs.shape[1] - 1, dec.m, rho, z, red.waist, red.k_s)
    return np.tensordot(dec.photon_coeffs[k], G, axes=1)[()]


def _interp_variable(z_tilde):
    # the axial grid is Gauss-Legendre in the Gouy angle
    return np.arctan(2.0 * np.asarray(z_tilde, dtype=float))


def _barycentric_weights(x):
    # 1 / prod_{k != j} (x_j - x_k), formed in log space; scipy would
    # otherwise shuffle the nodes at random and lose bitwise reproducibility
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    logw = -np.sum(np.log(np.abs(diff)), axis=1)
    sign = np.prod(np.sign(diff), axis=1)
    return sign * np.exp(logw - logw.max())


def atomic_coeffs_at(dec, k, z_tilde):
    """Atomic coefficients ``c_at[k, :, z]`` interpolated between axial nodes.

    Barycentric polynomial interpolation in the Gouy angle, the variable in
    which the nodes are Gauss-Legendre points.
    """
    _check_k(dec, k)
    z_tilde = np.asarray(z_tilde, dtype=float)
    lo, hi = dec.z_nodes[0], dec.z_nodes[-1]
    if np.any(z_tilde < lo) or np.any(z_tilde > hi):
        raise ValueError(f"z outside the nodal range [{lo}, {hi}]")
    x = _interp_variable(dec.z_nodes)
    xq = _interp_variable(z_tilde)
    out = BarycentricInterpolator(x, dec.atomic_coeffs[k], axis=1, wi=_barycentric_weights(x))(xq)
    # land exactly on stored values at the nodes
    hit = np.searchsorted(x, xq)
    for i, (h, v) in enumerate(zip(np.atleast_1d(hit), np.atleast_1d(xq))):
        if h < len(x) and x[h] == v:
            if out.ndim == 1:
                out = dec.atomic_coeffs[k][:, h].copy()
            else:
                out[:, i] = dec.atomic_coeffs[k][:, h]
    return out


def atomic_mode_eval(dec, k, rho, z, red):
    """Atomic envelope ``psi_at_k(rho, z) = sum_l c_at[k, l](z) conj(LG_l^m(rho, z))``.

    ``z`` (physical units) must lie between the first and last axial node;
    the carrier phases are not included.
    """
    z = float(z)
    c = atomic_coeffs_at(dec, k, z / red.sigma_z)
    G = lg_table(dec.atomic_coeffs.shape[1] - 1, dec.m, rho, z, red.waist, red.k_s)
    return np.tensordot(c, G.conj(), axes=1)[()]


def spectrum(decs, red=None, geom=None):
    """Merge per-``m`` spectra into one list sorted by descending coupling.

    Returns
    -------
    list of tuple
        ``(l, m, zeta_reduced, zeta_physical)`` where ``l`` is the SVD rank
        within its ``m``. ``zeta_physical`` uses the geometry's coupling
        prefactor (1 when no geometry is given).
    """
    rows = []
    for dec in decs:
        for l, z in enumerate(dec.singular_values):
            z = float(z)
            zp = float(physical_singular_value(red, geom, z)) if geom is not None else z
            rows.append((l, dec.m, z, zp))
    rows.sort(key=lambda r: (-r[2], r[1], r[0]))
    return rows


def transverse_gradient_energy(dec, red, n_rho=160):
    """Quadrature mean of ``|grad_perp psi_at_k|^2`` for every mode ``k``.

    Includes the azimuthal part ``m^2 / rho^2``. The radial derivative of the
    LG basis is taken by central differences on a Gauss-Legendre grid.
    """
    n_l = dec.atomic_coeffs.shape[1]
    x, wt = np.polynomial.legendre.leggauss(n_rho)
    G = np.zeros(dec.n_modes)
    for j, zt in enumerate(dec.z_nodes):
        z = zt * red.sigma_z
        R = red.waist * np.sqrt(1 + 4 * zt**2) * (8.0 + 1.5 * np.sqrt(2 * n_l + dec.m))
        rho = 0.5 * R * (x + 1)
        dr = 1e-5 * red.waist
        lg = lg_table(n_l - 1, dec.m, rho, z, red.waist, red.k_s).conj()
        dlg = (lg_table(n_l - 1, dec.m, rho + dr, z, red.waist, red.k_s)
               - lg_table(n_l - 1, dec.m, rho - dr, z, red.waist, red.k_s)).conj() / (2 * dr)
        psi = dec.atomic_coeffs[:, :, j] @ lg
        dpsi = dec.atomic_coeffs[:, :, j] @ dlg
        dens = np.abs(dpsi) ** 2 + dec.m**2 * np.abs(psi) ** 2 / rho**2
        G += dec.z_weights[j] * 2 * np.pi * 0.5 * R * (dens * rho * wt).sum(axis=1)
    return G


def mode_decay_rates(dec, gamma0, diffusion, red=None):
    """Heuristic per-mode decay ``Gamma_k = gamma0 + diffusion * G_k``.

    ``G_k`` is the transverse gradient energy of the atomic mode. This is a
    convenience model for feeding :mod:`artifact.temporal`, not a derived
    result.
    """
    if gamma0 < 0 or diffusion < 0:
        raise ValueError("gamma0 and diffusion must be non-negative")
    if diffusion == 0:
        return np.full(dec.n_modes, float(gamma0))
    if red is None:
        raise ValueError("a reduced geometry is required when diffusion > 0")
    return gamma0 + diffusion * transverse_gradient_energy(dec, red)

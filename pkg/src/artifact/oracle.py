"""Independent checks of the temporal closed forms by time slicing.

The pulse is cut into slices of length ``tau``. In every slice a fresh vacuum
input mode ``a_j`` meets the spin wave, which then decays. One slice maps::

    a_out_j = ca a_j + s b_j^+
    b_{j+1} = d (cb b_j + s a_j^+) + e f_j

Two gain steps are available:

``first_order``
    First-order coefficients ``ca = 1``, ``cb = 1 + zeta^2 tau / 2``,
    ``s = zeta sqrt(tau)``. Commutators are preserved only to ``O(tau)``.
``symplectic``
    Exact two-mode squeezer ``ca = cb = exp(zeta^2 tau / 2)``,
    ``s = sqrt(exp(zeta^2 tau) - 1)``; commutators are preserved exactly.

and two damping steps: ``euler`` (``d = 1 - Gamma tau``, noise ``e^2 = 2 Gamma
tau``) and ``exact`` (``d = exp(-Gamma tau)``, ``e^2 = 1 - d^2``).

Slice annihilators carry unit commutators, so photon flux correlations are
the slice moments divided by ``tau`` (and mixed ``b``-``a`` moments by
``sqrt(tau)``). Because the state is Gaussian with zero mean, second
moments describe it completely.
"""

from dataclasses import dataclass

import numpy as np


def _scheme(zeta, tau, gamma_loss=0.0, coupling="symplectic", damping="euler"):
    if coupling == "first_order":
        ca, cb, s = 1.0, 1.0 + 0.5 * zeta**2 * tau, zeta * np.sqrt(tau)
    elif coupling == "symplectic":
        ca = cb = np.exp(0.5 * zeta**2 * tau)
        s = np.sqrt(np.expm1(zeta**2 * tau))
    else:
        raise ValueError(f"unknown coupling scheme {coupling!r}")
    if damping == "euler":
        d, e2 = 1.0 - gamma_loss * tau, 2.0 * gamma_loss * tau
    elif damping == "exact":
        d = np.exp(-gamma_loss * tau)
        e2 = -np.expm1(-2 * gamma_loss * tau)
    else:
        raise ValueError(f"unknown damping scheme {damping!r}")
    return ca, cb, s, d, e2


def slice_coefficients(zeta, tau, j, scheme="first_order"):
    """Lossless input-output coefficients after ``j`` slices.

    Parameters
    ----------
    zeta : float
    tau : float
        Slice length.
    j : int
        Slice number, ``j >= 1``.
    scheme : {"first_order", "symplectic"}

    Returns
    -------
    photon_from_b : float
        Coefficient of ``b_0^+`` in ``a_out_j``.
    photon_from_slice : ndarray, shape (j,)
        Coefficients of ``a_in_i`` (``i = 0..j-1``) in ``a_out_j``; the last
        entry is the direct pass-through of ``a_in_{j-1}``.
    b_from_b : float
        Coefficient of ``b_0`` in ``b_j``.
    b_from_slice : ndarray, shape (j,)
        Coefficients of ``a_in_i^+`` in ``b_j``.
    """
    if tau <= 0 or j < 1:
        raise ValueError("tau must be positive and j >= 1")
    ca, cb, s, _, _ = _scheme(zeta, tau, coupling=scheme)
    i = np.arange(j)
    photon_from_slice = np.empty(j)
    photon_from_slice[:-1] = s**2 * cb ** (j - i[:-1] - 2.0)
    photon_from_slice[-1] = ca
    return (float(s * cb ** (j - 1)), photon_from_slice,
            float(cb**j), s * cb ** (j - i - 1.0))


def slice_map(zeta, tau, j, gamma_loss=0.0, coupling="symplectic", damping="euler", noise=True):
    """Real linear map of ``j`` slices in the doubled operator basis.

    Inputs are ``(b_0, a_0..a_{j-1}[, f_0..f_{j-1}])`` followed by their
    adjoints; outputs are ``(b_j, a_out_0..a_out_{j-1})`` followed by their
    adjoints.
    """
    ca, cb, s, d, e2 = _scheme(zeta, tau, gamma_loss, coupling, damping)
    e = np.sqrt(e2) if noise else 0.0
    n_in = 1 + j + (j if noise else 0)
    n_out = 1 + j

    def dag(row):
        return np.concatenate([row[n_in:], row[:n_in]])

    b = np.zeros(2 * n_in)
    b[0] = 1.0
    M = np.zeros((2 * n_out, 2 * n_in))
    for k in range(j):
        a_in = np.zeros(2 * n_in)
        a_in[1 + k] = 1.0
        a_out = ca * a_in + s * dag(b)
        M[1 + k] = a_out
        M[n_out + 1 + k] = dag(a_out)
        b = d * (cb * b + s * dag(a_in))
        if noise:
            b[1 + j + k] += e
    M[0] = b
    M[n_out] = dag(b)
    return M, n_in, n_out


def bogoliubov_defect(zeta, tau, j, gamma_loss=0.0, coupling="symplectic", damping="euler", noise=True):
    """Largest deviation of ``M J M^T`` from ``J`` for the ``j``-slice map.

    ``J`` is ``+1`` on annihilators and ``-1`` on creators, so a zero defect
    means every commutator among the outputs is canonical.
    """
    if tau <= 0 or j < 1:
        raise ValueError("tau must be positive and j >= 1")
    M, n_in, n_out = slice_map(zeta, tau, j, gamma_loss, coupling, damping, noise)
    J_in = np.concatenate([np.ones(n_in), -np.ones(n_in)])
    J_out = np.concatenate([np.ones(n_out), -np.ones(n_out)])
    return float(np.max(np.abs((M * J_in) @ M.T - np.diag(J_out))))


@dataclass(frozen=True)
class CovarianceRecord:
    """Correlations sampled on ``t_grid`` (rows ``t``, columns ``t'``)."""

    t_grid: np.ndarray
    aa: np.ndarray  # <a+(t) a(t')>
    bb: np.ndarray  # <b+(t) b(t')>
    ba: np.ndarray  # <b(t) a(t')>
    min_eigenvalue: float
    tau: float


def _moments(zeta, gamma_loss, tau, n_slices, coupling, damping):
    ca, cb, s, d, e2 = _scheme(zeta, tau, gamma_loss, coupling, damping)
    g = d * cb
    n = np.zeros(n_slices + 1)  # <b_j^+ b_j>
    A = np.zeros(n_slices + 1)  # <b_j b_j^+>
    A[0] = 1.0
    for k in range(n_slices):
        n[k + 1] = d**2 * (cb**2 * n[k] + s**2)
        A[k + 1] = d**2 * cb**2 * A[k] + e2
    return ca, cb, s, d, g, n, A


def propagate_covariance(p, t_grid, tau, coupling="symplectic", damping="euler", check_psd=True):
    """Propagate second moments slice by slice and sample them on ``t_grid``.

    Parameters
    ----------
    p : TemporalParams
    t_grid : array_like
        Non-negative, increasing sample times; each is rounded to the nearest
        slice boundary.
    tau : float
        Slice length, at most a tenth of the smallest grid spacing.
    coupling, damping : str
        Scheme selection, see the module docstring.
    check_psd : bool
        Record the smallest eigenvalue of the moment (Gram) matrices at every
        sample time.

    Returns
    -------
    CovarianceRecord
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or np.any(t < 0) or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be non-negative and strictly increasing")
    if tau <= 0:
        raise ValueError("tau must be positive")
    if len(t) > 1 and tau > np.min(np.diff(t)) / 10 * (1 + 1e-9):
        raise ValueError("tau must be at most a tenth of the grid spacing")
    if p.gamma_loss * tau > 0.1:
        raise ValueError("unstable step: Gamma * tau > 0.1")
    idx = np.rint(t / tau).astype(int)
    ca, cb, s, d, g, n, A = _moments(p.zeta, p.gamma_loss, tau, int(idx[-1]), coupling, damping)
    I, K = np.meshgrid(idx, idx, indexing="ij")
    lo, hi = np.minimum(I, K), np.maximum(I, K)
    gap = (hi - lo).astype(float)
    aa = s**2 * g**gap * A[lo] / tau
    bb = g**gap * n[lo]
    ba = s * g**gap * np.where(K < I, A[K], A[I]) / np.sqrt(tau)
    min_eig = np.inf
    if check_psd:
        for J in range(len(idx)):
            min_eig = min(min_eig, _gram_min_eig(idx[J], idx[:J], ca, cb, s, d, g, n, A))
    return CovarianceRecord(t_grid=t, aa=aa, bb=bb, ba=ba, min_eigenvalue=float(min_eig), tau=tau)


def _gram_min_eig(J, past, ca, cb, s, d, g, n, A):
    # Gram matrices over (b_J, a_out_i^+) and (b_J^+, a_out_i) for sampled
    # past slices i < J; both must be positive semidefinite
    I, K = np.meshgrid(past, past, indexing="ij")
    lo, hi = np.minimum(I, K), np.maximum(I, K)
    gap = (hi - lo).astype(float)
    # <a_i a_k^+>
    aad = np.where(hi == lo, ca**2 + s**2 * n[lo], s**2 * g ** np.maximum(gap - 1, 0) * d * (ca + cb * n[lo]))
    # <a_i^+ a_k>
    ada = s**2 * g**gap * A[lo]
    a_b = s * g ** (J - past - 1.0) * d * (ca + cb * n[past])  # <a_i b_J>
    b_a = s * g ** (J - past.astype(float)) * A[past]  # <b_J a_i>
    G1 = np.block([[np.array([[n[J]]]), a_b[None, :]], [a_b[:, None], aad]])
    G2 = np.block([[np.array([[A[J]]]), b_a[None, :]], [b_a[:, None], ada]])
    scale1 = max(1.0, np.max(np.abs(G1)))
    scale2 = max(1.0, np.max(np.abs(G2)))
    return min(np.linalg.eigvalsh(G1 / scale1)[0], np.linalg.eigvalsh(G2 / scale2)[0])

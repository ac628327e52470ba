"""Optimal linear estimator of the spin-wave number from photon counts.

The estimator ``D = b+(T) b(T) - int_0^T w(t) a+(t) a(t) dt`` is scored by
its mean square ``<D^2>``, which for the Gaussian state reduces by Wick's
theorem to::

    <D^2> = n(2n+1) - 2 int w (n N + C_ba(T,t)^2)
            + (int w N)^2 + int int w w' C(t,t')^2 + int w^2 N

with ``C = <a+ a>``, ``N(t) = C(t,t)``, ``C_ba = <b(T) a(t)>`` and
``n = <b+(T) b(T)>``. Two discretizations are provided.

``collocation``
    Trapezoid rule on a uniform grid, solving the stationarity condition
    ``int (C^2 + N N') w' + N w = C_ba^2 + n N`` as a dense SPD system.
    The optimum of the continuous problem cancels terms of size ``n^2``
    down to ``O(n)``, so this route degrades once ``n`` is large.

``ritz``
    Minimizes the same functional written in the variable
    ``u(t) = exp(2 gamma (T-t)) (1 - int_t^T zeta^2 e^{2 gamma (s-T)} w(s) ds)``,
    with ``w = (2 gamma u + u') / zeta^2`` and ``u(T) = 1``::

        <D^2> = (a-1)^2 - a + u(0)^2 + (4 Gamma/zeta^2) int N u^2 + int N w (w-1),
        a = u(0) + 2 Gamma int u

    No term exceeds ``O(n)``, so it stays accurate at any gain. ``u`` is
    piecewise linear on the grid.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from .temporal import TemporalParams, corr_aa, corr_ba, corr_bb


class DegenerateProblemError(ValueError):
    """Raised when the estimator problem has no coupling."""


class SolveError(np.linalg.LinAlgError):
    """Raised when the discrete system cannot be factorized."""


@dataclass(frozen=True)
class EstimatorProblem:
    params: TemporalParams
    T: float
    n_t: int = 400
    t_nodes: np.ndarray = field(init=False, repr=False)
    t_weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")
        if self.n_t < 8:
            raise ValueError("n_t must be at least 8")
        t = np.linspace(0.0, self.T, self.n_t)
        q = np.full(self.n_t, t[1] - t[0])
        q[0] = q[-1] = 0.5 * q[0]
        object.__setattr__(self, "t_nodes", t)
        object.__setattr__(self, "t_weights", q)


@dataclass(frozen=True)
class EstimatorSolution:
    weights: np.ndarray
    expected_sq_error: float
    n_b: float
    noise_reduction_db: float
    t_nodes: np.ndarray
    method: str = "collocation"


def _trapezoid_terms(p, T, t):
    C = corr_aa(p, t[:, None], t[None, :])
    N = np.diag(C).copy()
    cba = corr_ba(p, T, t)
    return C, N, cba


def build_system(prob):
    """Trapezoid discretization of the stationarity condition.

    Returns
    -------
    A : ndarray, shape (n_t, n_t)
        ``q_j (C_ij^2 + N_i N_j) + delta_ij N_i``.
    r : ndarray, shape (n_t,)
        ``C_ba(T, t_i)^2 + n_b N_i``.
    """
    p, t, q = prob.params, prob.t_nodes, prob.t_weights
    C, N, cba = _trapezoid_terms(p, prob.T, t)
    n_b = corr_bb(p, prob.T, prob.T)
    A = (C**2 + np.outer(N, N)) * q[None, :] + np.diag(N)
    r = cba**2 + n_b * N
    return A, r


def _trapezoid_value(p, T, t, w):
    q = np.full(len(t), t[1] - t[0])
    q[0] = q[-1] = 0.5 * q[0]
    C, N, cba = _trapezoid_terms(p, T, t)
    n = corr_bb(p, T, T)
    qw = q * w
    return (n * (2 * n + 1) - 2 * qw @ (n * N + cba**2) + (qw @ N) ** 2
            + qw @ (C**2) @ qw + (qw * w) @ N)


def expected_sq_error(prob, weights, refine=1):
    """Five-term ``<D^2>`` for an arbitrary weight function.

    Parameters
    ----------
    prob : EstimatorProblem
    weights : array_like
        ``w`` at ``prob.t_nodes``.
    refine : int or "richardson"
        ``1`` evaluates the trapezoid rule on the problem grid. An integer
        ``k > 1`` interpolates ``w`` linearly onto a grid ``k`` times finer.
        ``"richardson"`` combines ``k = 2`` and ``k = 4`` to cancel the
        leading quadrature error.

    Returns
    -------
    float
    """
    w = np.asarray(weights, dtype=float)
    if w.shape != prob.t_nodes.shape:
        raise ValueError("weights must be given on the problem grid")
    if refine == "richardson":
        e2 = expected_sq_error(prob, w, 2)
        e4 = expected_sq_error(prob, w, 4)
        return (4 * e4 - e2) / 3
    refine = int(refine)
    if refine < 1:
        raise ValueError("refine must be a positive integer")
    if refine == 1:
        return float(_trapezoid_value(prob.params, prob.T, prob.t_nodes, w))
    tf = np.linspace(0.0, prob.T, (prob.n_t - 1) * refine + 1)
    return float(_trapezoid_value(prob.params, prob.T, tf, np.interp(tf, prob.t_nodes, w)))


def _check(prob):
    if prob.params.zeta <= 0:
        raise DegenerateProblemError("zeta = 0: no photons are scattered, the estimator is undefined")


def _db(n_b, d2):
    return 10 * np.log10(n_b / d2) if d2 > 0 else np.inf


def _solve_collocation(prob):
    A, r = build_system(prob)
    q = prob.t_weights
    # q-weighting turns A into the symmetric q K q + diag(q N)
    S = A * q[:, None]
    S = 0.5 * (S + S.T)
    try:
        cf = scipy.linalg.cho_factor(S)
    except np.linalg.LinAlgError as exc:
        raise SolveError(
            f"trapezoid system is not numerically positive definite ({exc}); "
            "the gain is too high for this discretization, use method='ritz'") from exc
    w = scipy.linalg.cho_solve(cf, q * r)
    if not np.all(np.isfinite(w)):
        raise SolveError("non-finite weights from the trapezoid system")
    return w, expected_sq_error(prob, w, "richardson")


def _ritz_assemble(prob, n_gauss=5):
    p = prob.params
    z2, G, g = p.zeta**2, p.gamma_loss, p.gamma_net
    t = prob.t_nodes
    h = t[1] - t[0]
    n = len(t)
    xg, wg = np.polynomial.legendre.leggauss(n_gauss)
    xg, wg = 0.5 * (xg + 1), 0.5 * wg
    s = t[:-1, None] + h * xg[None, :]
    Ns = corr_aa(p, s, s) * wg * h  # (cells, gauss)
    phi = np.stack([1 - xg, xg])  # hat functions on a cell
    W = (2 * g * phi + np.array([-1.0, 1.0])[:, None] / h) / z2  # w = (2 gamma u + u')/zeta^2
    Q = np.zeros((n, n))
    b = np.zeros(n)
    L = np.zeros(n)
    for a_ in range(2):
        b[a_:n - 1 + a_] += 0.5 * Ns @ W[a_]
        L[a_:n - 1 + a_] += 2 * G * h * (phi[a_] * wg).sum()
        for c_ in range(2):
            blk = Ns @ (W[a_] * W[c_] + (4 * G / z2) * phi[a_] * phi[c_])
            Q[np.arange(a_, n - 1 + a_), np.arange(c_, n - 1 + c_)] += blk
    L[0] += 1.0
    e0 = np.zeros(n)
    e0[0] = 1.0
    # J(u) = (a-1)^2 - a + u0^2 + u.Q.u - 2 b.u with a = L.u
    Qt = Q + np.outer(L, L) + np.outer(e0, e0)
    bt = b + 1.5 * L
    return Qt, bt


def ritz_value(prob, u):
    """``<D^2>`` of the piecewise-linear ``u`` (see module docstring)."""
    Qt, bt = _ritz_assemble(prob)
    u = np.asarray(u, dtype=float)
    return float(u @ Qt @ u - 2 * bt @ u + 1.0)


def _solve_ritz(prob):
    Qt, bt = _ritz_assemble(prob)
    A = Qt[:-1, :-1]
    rhs = bt[:-1] - Qt[:-1, -1]
    d = 1 / np.sqrt(np.diag(A))
    try:
        cf = scipy.linalg.cho_factor(A * d[:, None] * d[None, :])
    except np.linalg.LinAlgError as exc:
        raise SolveError(f"Ritz system is not positive definite ({exc})") from exc
    u = np.append(d * scipy.linalg.cho_solve(cf, d * rhs), 1.0)
    d2 = float(u @ Qt @ u - 2 * bt @ u + 1.0)
    # w is piecewise linear plus a jump in u'; report node averages
    h = prob.t_nodes[1] - prob.t_nodes[0]
    g, z2 = prob.params.gamma_net, prob.params.zeta**2
    du = np.diff(u) / h
    left = (2 * g * u[:-1] + du) / z2   # cell value at its left end
    right = (2 * g * u[1:] + du) / z2   # cell value at its right end
    w = np.empty_like(u)
    w[0], w[-1] = left[0], right[-1]
    w[1:-1] = 0.5 * (right[:-1] + left[1:])
    return w, d2


def solve_weights(prob, method="auto"):
    """Optimal weight function and its mean square error.

    Parameters
    ----------
    prob : EstimatorProblem
    method : {"collocation", "ritz", "auto"}
        ``collocation`` solves the trapezoid system and scores the result with
        a Richardson-refined quadrature; ``ritz`` minimizes the cancellation
        free form and is the one to use at high gain. ``auto`` picks ``ritz``
        for net gain ``gamma > 0`` and ``collocation`` otherwise, where the
        spin-wave number stays bounded and ``u`` would vary too steeply for
        linear elements.

    Returns
    -------
    EstimatorSolution
    """
    _check(prob)
    if method == "auto":
        method = "ritz" if prob.params.gamma_net > 0 else "collocation"
    if method == "collocation":
        w, d2 = _solve_collocation(prob)
    elif method == "ritz":
        w, d2 = _solve_ritz(prob)
    else:
        raise ValueError(f"unknown method {method!r}")
    n_b = float(corr_bb(prob.params, prob.T, prob.T))
    return EstimatorSolution(weights=w, expected_sq_error=float(d2), n_b=n_b,
                             noise_reduction_db=float(_db(n_b, d2)),
                             t_nodes=prob.t_nodes.copy(), method=method)


def fit_exponential(weights, t_nodes, window, method="log"):
    """Fit ``w(t) = A exp(B (t - T))`` over ``t in [T - window, T]``.

    Parameters
    ----------
    weights, t_nodes : array_like
    window : float
        Width of the fitting window ending at ``T = t_nodes[-1]``.
    method : {"log", "direct"}
        ``log`` is linear least squares on ``log w`` and requires positive
        weights; ``direct`` is nonlinear least squares on ``w`` itself and
        tolerates weights that cross zero.

    Returns
    -------
    A, B, rms_residual : float
    """
    w = np.asarray(weights, dtype=float)
    t = np.asarray(t_nodes, dtype=float)
    T = t[-1]
    if not 0 < window <= T - t[0]:
        raise ValueError("window must lie inside the time grid")
    sel = t >= T - window - 1e-12 * T
    x, y = t[sel] - T, w[sel]
    if method == "log":
        if np.any(y <= 0):
            raise ValueError("non-positive weights inside the fit window")
        B, lnA = np.polyfit(x, np.log(y), 1)
        A = np.exp(lnA)
    elif method == "direct":
        pos = y > 0
        if pos.sum() >= 2:
            B0, lnA0 = np.polyfit(x[pos], np.log(y[pos]), 1)
            guess = (np.exp(lnA0), B0)
        else:
            guess = (y[-1], 1.0)
        (A, B), _ = scipy.optimize.curve_fit(lambda s, a, b: a * np.exp(b * s), x, y, p0=guess,
                                             maxfev=10000)
    else:
        raise ValueError(f"unknown fit method {method!r}")
    rms = float(np.sqrt(np.mean((A * np.exp(B * x) - y) ** 2)))
    return float(A), float(B), rms

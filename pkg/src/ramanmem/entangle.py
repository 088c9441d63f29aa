"""Light-spin entanglement from the amplifying (A > 0) interaction.

EPR-type variances use unit-norm coefficient vectors in vacuum-noise
units, so each uncorrelated vacuum term contributes 1 and the separable
bound on V1 + V3 is 4.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy.optimize import brentq

from .coupling import InterfaceParams
from .propagator import Grid, TransferMatrix, build_transfer
from .spectral import GaussianState, initial_state, propagate

SEPARABLE_BOUND = 4.0


class SolverError(RuntimeError):
    """Mode optimization did not converge; carries the last iterate."""

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


@dataclass(frozen=True)
class ModePair:
    """Temporal mode h(t), spatial mode g(z) and the minimized objective.

    ``h`` and ``g`` satisfy sum(h^2) dt = sum(g^2) dz = 1.
    """

    h: np.ndarray
    g: np.ndarray
    residual: float
    iterations: int = 0
    history: tuple = ()


def run_entangle(params: InterfaceParams, grid: Grid) -> GaussianState:
    """Propagate vacuum light and coherent spins through the amplifier."""
    if params.A <= 0:
        raise ValueError("entanglement needs A > 0 (Fz_bar < 0)")
    return propagate(initial_state(grid, params), build_transfer(params, grid))


def _coefficients(modes: ModePair, grid: Grid):
    return modes.h * np.sqrt(grid.dt), modes.g * np.sqrt(grid.dz)


def epr_variance(state: GaussianState, modes: ModePair):
    """(V1, V3) for hXi_I - gT_I and hXi_III + gT_III; vacuum gives (2, 2)."""
    g = state.grid
    if modes.h.size != g.n_t or modes.g.size != g.n_z:
        raise ValueError("mode lengths do not match the grid")
    h, s = _coefficients(modes, g)
    out = []
    for f_ch, s_ch, sign in (("Xi_I", "T_I", -1.0), ("Xi_III", "T_III", 1.0)):
        u = np.zeros(state.cov.shape[0])
        u[state.slice(f_ch)] = h
        u[state.slice(s_ch)] = sign * s
        out.append(state.variance(u))
    return tuple(out)


def entanglement_witness(state: GaussianState, modes: ModePair):
    """EPR-sum test: (V1 + V3, 4, V1 + V3 < 4)."""
    v1, v3 = epr_variance(state, modes)
    total = v1 + v3
    return total, SEPARABLE_BOUND, bool(total < SEPARABLE_BOUND)


def mode_covariance(state: GaussianState, modes: ModePair) -> np.ndarray:
    """4x4 covariance of (q_L, p_L, q_S, p_S) for the mode pair.

    Light: q = Xi_III, p = Xi_I. Spin: q = T_III, p = T_I, whose commutator
    sign is that of -Fz; the caller reads it from ``state.Fz_bar``.
    """
    g = state.grid
    h, s = _coefficients(modes, g)
    rows = []
    for ch, w in (("Xi_III", h), ("Xi_I", h), ("T_III", s), ("T_I", s)):
        u = np.zeros(state.cov.shape[0])
        u[state.slice(ch)] = w
        rows.append(u)
    U = np.array(rows)
    if state.factor is not None:
        W = U @ state.factor
        return W @ W.T
    return U @ state.cov @ U.T


def ppt_min_eigenvalue(state: GaussianState, modes: ModePair) -> float:
    """Smallest symplectic eigenvalue of the partially transposed mode state.

    Values below 1 (vacuum units) certify entanglement of the two modes.
    """
    V = mode_covariance(state, modes)
    J = np.array([[0.0, 1.0], [-1.0, 0.0]])
    spin_sign = -np.sign(state.Fz_bar) or 1.0
    Om = np.zeros((4, 4))
    Om[:2, :2] = J
    Om[2:, 2:] = spin_sign * J
    P = np.diag([1.0, 1.0, 1.0, -1.0])
    Vpt = P @ V @ P
    ev = np.abs(np.linalg.eigvals(1j * Om @ Vpt))
    return float(ev.min())


def _sphere_minimizer(w, U, c):
    """argmin over |x| = 1 of x^T Q x - 2 x^T c with Q = U diag(w) U^T."""
    b = U.T @ c
    nb = np.linalg.norm(b)
    wmin = w[0]
    if nb == 0:
        return U[:, 0]
    phi = lambda lam: np.sum((b / (w - lam)) ** 2) - 1.0
    hi = wmin - 1e-14 * max(1.0, abs(wmin), nb)
    if phi(hi) <= 0:
        # hard case: remaining norm goes into the lowest eigenvector
        y = np.zeros_like(b)
        y[1:] = b[1:] / (w[1:] - wmin)
        y[0] = np.sqrt(max(0.0, 1 - np.sum(y[1:] ** 2))) * (np.sign(b[0]) or 1.0)
        return U @ y
    lam = brentq(phi, wmin - nb, hi, xtol=1e-15 * max(1.0, nb), maxiter=500)
    return U @ (b / (w - lam))


def solve_modes(params: InterfaceParams, grid: Grid, max_iter: int = 500, tol: float = 1e-12) -> ModePair:
    """Minimize the residual of the mode equations over unit h and g.

    The residual functionals are the adjoint transfer applied to (h, -g),
    so in vacuum units their squared norm equals V1 for vacuum inputs.
    For an exactly symplectic transfer the left singular vector of the
    smallest singular value already has equal field and spin weight, so it
    is the starting point. Block-coordinate steps then solve the h and g
    subproblems exactly on the unit sphere. The recorded history starts at
    the flat collective modes and never increases.
    """
    if params.A <= 0:
        raise ValueError("mode equations are posed for A > 0")
    tm = build_transfer(params, grid)
    M = tm.normalized("I")
    nt = grid.n_t
    B = M[:nt].T
    C = M[nt:].T

    def objective(x, y):
        r = B @ x - C @ y
        return float(r @ r)

    x = np.full(nt, 1 / np.sqrt(nt))
    y = np.full(grid.n_z, 1 / np.sqrt(grid.n_z))
    if objective(x, -y) < objective(x, y):
        y = -y
    hist = [objective(x, y)]

    U = np.linalg.svd(M, full_matrices=False)[0]
    u = U[:, -1]
    cx, cy = u[:nt], -u[nt:]
    if np.linalg.norm(cx) > 0 and np.linalg.norm(cy) > 0:
        cx, cy = cx / np.linalg.norm(cx), cy / np.linalg.norm(cy)
        if objective(cx, cy) < hist[-1]:
            x, y = cx, cy
            hist.append(objective(x, y))

    _, sb, vbt = np.linalg.svd(B, full_matrices=False)
    _, sc, vct = np.linalg.svd(C, full_matrices=False)
    wb, Vb = (sb**2)[::-1], vbt[::-1].T
    wc, Vc = (sc**2)[::-1], vct[::-1].T
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        nx = _sphere_minimizer(wb, Vb, B.T @ (C @ y))
        ny = _sphere_minimizer(wc, Vc, C.T @ (B @ nx))
        v = objective(nx, ny)
        if v >= hist[-1]:
            converged = True
            break
        x, y = nx, ny
        hist.append(v)
        if hist[-2] - v <= tol * hist[-2]:
            converged = True
            break
    sgn = np.sign(x.sum()) or 1.0
    pair = ModePair(sgn * x / np.sqrt(grid.dt), sgn * y / np.sqrt(grid.dz), hist[-1], it, tuple(hist))
    if not converged:
        raise SolverError("mode optimization did not converge", pair)
    return pair


def flat_modes(grid: Grid, sign: float = 1.0) -> ModePair:
    """Lowest cosine (collective) modes."""
    return ModePair(np.full(grid.n_t, 1 / np.sqrt(grid.T)), sign * np.full(grid.n_z, 1 / np.sqrt(grid.L)), np.nan)


def fredholm_operator(params: InterfaceParams, grid: Grid) -> np.ndarray:
    """Cell-integrated operator of the mode equations, physical units.

    Rows are the two residual functionals sampled at the midpoints; columns
    act on cell values of (h, g). Built directly from the I0/I1 kernels of
    the mode equations, independently of :func:`build_transfer`.
    """
    A = params.A
    T, L = grid.T, grid.L
    t, z, te, ze = grid.t, grid.z, grid.t_edges, grid.z_edges
    ct, cz = A * L, A * T
    # h(t) + int_t^T sqrt(c/(t'-t)) I1(2 sqrt(c (t'-t))) h(t') dt'
    up = np.clip(te[None, 1:] - t[:, None], 0, None)
    dn = np.clip(te[None, :-1] - t[:, None], 0, None)
    Hh = np.eye(grid.n_t) + special.i0(2 * np.sqrt(ct * up)) - special.i0(2 * np.sqrt(ct * dn))
    up = np.clip(ze[None, 1:] - z[:, None], 0, None)
    dn = np.clip(ze[None, :-1] - z[:, None], 0, None)
    Gg = np.eye(grid.n_z) + special.i0(2 * np.sqrt(cz * up)) - special.i0(2 * np.sqrt(cz * dn))

    def prim(u, w):
        with np.errstate(invalid="ignore", divide="ignore"):
            v = np.sqrt(u / (A * w)) * special.i1(2 * np.sqrt(A * u * w))
        return np.where(w > 0, v, u)

    # - cbar13 eps Fz int_0^L I0(2 sqrt(A (T - t) z)) g(z) dz, w = T - t
    wt = np.broadcast_to((T - t)[:, None], (grid.n_t, grid.n_z))
    Hg = -params.cbar13 * params.epsilon * params.Fz_bar * (prim(ze[None, 1:], wt) - prim(ze[None, :-1], wt))
    # + 2 eps Xi2 int_0^T I0(2 sqrt(A (L - z) t)) h(t) dt, w = L - z
    wz = np.broadcast_to((L - z)[:, None], (grid.n_z, grid.n_t))
    Gh = 2 * params.epsilon * params.Xi2_bar * (prim(te[None, 1:], wz) - prim(te[None, :-1], wz))
    return np.block([[Hh, Hg], [Gh, Gg]])

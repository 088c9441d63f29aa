"""Input/output transfer of the rotated light-spin wave equations.

In the rotated frame each channel pair obeys

    d/dz Xi  = -2 s eps Xi2 T,      d/dt T = s cbar13 eps Fz Xi,

with s = +1 for channel I and s = -1 for channel III. The solution is an
integral transform with Bessel kernels (J for A < 0, I for A > 0). Here it
is discretized on a uniform midpoint grid: every input sample is held
constant over its cell and the kernels are integrated exactly over each
cell, which also covers the weakly singular self-interaction cell.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy.signal import lfilter

from .coupling import InterfaceParams


class DegenerateCouplingError(ValueError):
    """A = 0: the transform is the identity and has no Bessel kernels."""


class GridMismatchError(ValueError):
    """Array lengths do not match the grid."""


class OracleError(RuntimeError):
    """Brute-force integrator could not produce a result."""


_BESSEL = {"J0": special.j0, "J1": special.j1, "I0": special.i0, "I1": special.i1}


def bessel(kind: str, x):
    """Bessel function J0, J1, I0 or I1 for nonnegative arguments."""
    try:
        f = _BESSEL[kind]
    except KeyError:
        raise ValueError(f"unknown Bessel kind {kind!r}") from None
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("Bessel kernel arguments must be nonnegative")
    return f(x)


@dataclass(frozen=True)
class Grid:
    """Uniform midpoint grid on [0, T] x [0, L]."""

    n_t: int
    n_z: int
    T: float
    L: float

    def __post_init__(self):
        if self.n_t < 2 or self.n_z < 2:
            raise ValueError("grid needs at least two cells per axis")
        if not (self.T > 0 and self.L > 0):
            raise ValueError("grid extents must be positive")

    @classmethod
    def square(cls, n: int, params: InterfaceParams) -> "Grid":
        return cls(n, n, params.T, params.L)

    @property
    def dt(self) -> float:
        return self.T / self.n_t

    @property
    def dz(self) -> float:
        return self.L / self.n_z

    @property
    def t(self) -> np.ndarray:
        return (np.arange(self.n_t) + 0.5) * self.dt

    @property
    def z(self) -> np.ndarray:
        return (np.arange(self.n_z) + 0.5) * self.dz

    @property
    def t_edges(self) -> np.ndarray:
        return np.arange(self.n_t + 1) * self.dt

    @property
    def z_edges(self) -> np.ndarray:
        return np.arange(self.n_z + 1) * self.dz


@dataclass(frozen=True)
class QuadratureChannel:
    """Samples of one rotated channel (Xi_I, Xi_III, T_I or T_III)."""

    label: str
    samples: np.ndarray

    def __post_init__(self):
        if self.label not in ("Xi_I", "Xi_III", "T_I", "T_III"):
            raise ValueError(f"unknown channel label {self.label!r}")


def _phi(kappa1, OmegaBar, z, t):
    return kappa1 * np.asarray(z) + OmegaBar * np.asarray(t)


def rotate_frame(direction: str, phi_params, grid: Grid, field=None, spin=None,
                 field_z: float = 0.0, spin_t: float = 0.0):
    """Rotate between (Xi1, Xi3), (T_xy, T_xieta) and the I/III channels.

    Parameters
    ----------
    direction : {"in", "out"}
        ``"in"`` maps lab components to rotated channels, ``"out"`` inverts.
    phi_params : (kappa1, OmegaBar)
        phi(z, t) = kappa1 z + OmegaBar t.
    field : pair of arrays on the time grid, evaluated at ``z = field_z``.
    spin : pair of arrays on the space grid, evaluated at ``t = spin_t``.
    """
    if direction not in ("in", "out"):
        raise ValueError("direction must be 'in' or 'out'")
    k1, ob = phi_params
    sgn = 1.0 if direction == "in" else -1.0
    out_field = out_spin = None
    if field is not None:
        a, b = (np.asarray(f, float) for f in field)
        phi = sgn * _phi(k1, ob, field_z, grid.t)
        phi = phi.reshape(phi.shape + (1,) * (a.ndim - 1))
        c, s = np.cos(phi), np.sin(phi)
        out_field = (c * a - s * b, s * a + c * b)
    if spin is not None:
        a, b = (np.asarray(f, float) for f in spin)
        phi = sgn * _phi(k1, ob, grid.z, spin_t)
        phi = phi.reshape(phi.shape + (1,) * (a.ndim - 1))
        c, s = np.cos(phi), np.sin(phi)
        out_spin = (c * a + s * b, -s * a + c * b)
    return out_field, out_spin


@dataclass(frozen=True)
class TransferMatrix:
    """Discretized channel-I transfer; channel III flips the cross blocks.

    Blocks act on physical sample values: ``K_ff`` maps field-in to
    field-out, ``K_fa`` spin-in to field-out, ``K_af`` field-in to spin-out
    and ``K_aa`` spin-in to spin-out.
    """

    K_ff: np.ndarray
    K_fa: np.ndarray
    K_af: np.ndarray
    K_aa: np.ndarray
    branch: str
    grid: Grid
    params: InterfaceParams

    def channel(self, ch: str) -> np.ndarray:
        """Stacked (field, spin) matrix for channel ``"I"`` or ``"III"``."""
        s = {"I": 1.0, "III": -1.0}[ch]
        return np.block([[self.K_ff, s * self.K_fa], [s * self.K_af, self.K_aa]])

    @property
    def noise_scales(self) -> np.ndarray:
        """Square roots of the vacuum variances of the field and spin samples."""
        g, p = self.grid, self.params
        return np.concatenate([
            np.full(g.n_t, np.sqrt(p.Xi2_bar / g.dt)),
            np.full(g.n_z, np.sqrt(p.cbar13 * abs(p.Fz_bar) / (2 * g.dz))),
        ])

    def normalized(self, ch: str = "I") -> np.ndarray:
        """Channel matrix acting on samples in vacuum-noise units."""
        s = self.noise_scales
        return self.channel(ch) * s[None, :] / s[:, None]


def _self_block(points, edges, c, b0):
    """Exact cell integrals of delta -/+ sqrt(c/tau) B1(2 sqrt(c tau)).

    For both J and I kernels the integrand is d/dtau B0(2 sqrt(c tau)),
    so each cell contributes a difference of B0 at the clipped cell ends.
    """
    hi = np.clip(points[:, None] - edges[None, :-1], 0.0, None)
    lo = np.clip(points[:, None] - edges[None, 1:], 0.0, None)
    return np.eye(points.size) + b0(2 * np.sqrt(c * hi)) - b0(2 * np.sqrt(c * lo))


def _cross_primitive(u, w, a, b1):
    """Integral over [0, u] of B0(2 sqrt(a u' w)) du'."""
    arg = 2 * np.sqrt(a * u * w)
    with np.errstate(invalid="ignore", divide="ignore"):
        val = np.sqrt(u / (a * w)) * b1(arg)
    # w -> 0 limit: B0(0) = 1
    return np.where(w > 0, val, u)


def build_transfer(params: InterfaceParams, grid: Grid) -> TransferMatrix:
    """Discretize the Bessel-kernel transform on ``grid``.

    Raises
    ------
    DegenerateCouplingError
        If ``params.A == 0``.
    """
    A = params.A
    if A == 0:
        raise DegenerateCouplingError("A = 0; use the identity transform")
    ent = A > 0
    a = abs(A)
    b0 = special.i0 if ent else special.j0
    b1 = special.i1 if ent else special.j1
    T, L = grid.T, grid.L
    t, z, te, ze = grid.t, grid.z, grid.t_edges, grid.z_edges
    K_ff = _self_block(t, te, a * L, b0)
    K_aa = _self_block(z, ze, a * T, b0)
    w_t = np.broadcast_to(t[:, None], (grid.n_t, grid.n_z))
    w_z = np.broadcast_to(z[:, None], (grid.n_z, grid.n_t))
    pf = _cross_primitive
    K_fa = -2 * params.epsilon * params.Xi2_bar * (
        pf(L - ze[None, :-1], w_t, a, b1) - pf(L - ze[None, 1:], w_t, a, b1))
    K_af = params.cbar13 * params.epsilon * params.Fz_bar * (
        pf(T - te[None, :-1], w_z, a, b1) - pf(T - te[None, 1:], w_z, a, b1))
    branch = "entanglement" if ent else "memory"
    return TransferMatrix(K_ff, K_fa, K_af, K_aa, branch, grid, params)


def apply_transfer(tm: TransferMatrix, field_in, spin_in):
    """Apply the transfer to both conjugate channels.

    ``field_in`` and ``spin_in`` are pairs (channel I, channel III) of arrays
    with leading dimension n_t and n_z. Returns ``(field_out, spin_out)``
    with the same pair layout.
    """
    g = tm.grid
    fI, fIII = (np.asarray(x, float) for x in field_in)
    sI, sIII = (np.asarray(x, float) for x in spin_in)
    if fI.shape[0] != g.n_t or fIII.shape[0] != g.n_t:
        raise GridMismatchError(f"field input length must be {g.n_t}")
    if sI.shape[0] != g.n_z or sIII.shape[0] != g.n_z:
        raise GridMismatchError(f"spin input length must be {g.n_z}")
    field_out = (tm.K_ff @ fI + tm.K_fa @ sI, tm.K_ff @ fIII - tm.K_fa @ sIII)
    spin_out = (tm.K_af @ fI + tm.K_aa @ sI, -tm.K_af @ fIII + tm.K_aa @ sIII)
    return field_out, spin_out


def symplectic_residual(tm: TransferMatrix) -> float:
    """Max-norm deviation of the propagated commutator from its target.

    Works in vacuum-noise units where the commutator form of the inputs is
    D = diag(1, -sign(Fz)) per channel (field block from the 2 Xi2 delta,
    spin block from -cbar13 Fz delta). The output cross blocks vanish for
    t < T and z < L, so the target equals the input form. For the
    amplifying branch the residual is divided by ||M||_2^2, the scale at
    which rounding and discretization errors of the product appear.
    """
    g = tm.grid
    MI = tm.normalized("I")
    MIII = tm.normalized("III")
    d = np.concatenate([np.ones(g.n_t), -np.sign(tm.params.Fz_bar) * np.ones(g.n_z)])
    R = (MIII * d[None, :]) @ MI.T - np.diag(d)
    res = float(np.abs(R).max())
    if tm.branch == "entanglement":
        res /= max(1.0, float(np.linalg.norm(MI, 2)) ** 2)
    return res


def _box_coefficients(params, dt, dz, s):
    """Cayley (box) update for one cell; exactly symplectic and second order."""
    al = s * params.epsilon * params.Xi2_bar * dz
    be = s * params.cbar13 * params.epsilon * params.Fz_bar * dt / 2
    den = 1 + al * be
    if den == 0:
        raise OracleError("singular cell update; refine the oracle grid")
    diag = (1 - al * be) / den
    return diag, -2 * al / den, 2 * be / den


def _box_march(params, n_t, n_z, dt, dz, x, y, s):
    """March the box scheme in z; each slab is a linear recurrence in t."""
    m, m_xy, m_yx = _box_coefficients(params, dt, dz, s)
    x = x.copy()
    y_out = np.empty_like(y)
    for k in range(n_z):
        y0 = y[k]
        seq, _ = lfilter([m_yx], [1.0, -m], x, axis=0, zi=(m * y0)[None, :])
        before = np.concatenate([y0[None, :], seq[:-1]], axis=0)
        y_out[k] = seq[-1]
        x = m * x + m_xy * before
    return x, y_out


def _fine_inputs(values, n, r, coord):
    """Fine-grid input: callables are sampled, arrays are held per cell."""
    if callable(values):
        return np.asarray(values(coord), float)
    arr = np.asarray(values, float)
    if arr.shape[0] != n:
        raise GridMismatchError(f"oracle input length must be {n}")
    return np.repeat(arr, r, axis=0)


def pde_oracle(params: InterfaceParams, grid: Grid, field_in, spin_in, refine: int = 9,
               richardson: bool = True):
    """Brute-force solution of the rotated first-order system.

    Parameters
    ----------
    field_in, spin_in : pairs (channel I, channel III)
        Either arrays on ``grid`` (held constant over each cell, the reading
        of a sample as a cell amplitude) or callables of t and z evaluated
        on the refined grid. Extra trailing dimensions are batched.
    refine : odd int
        Sub-cells per grid cell; outputs are read at the sub-cell that
        contains the coarse midpoint.
    richardson : bool
        Combine ``refine`` and ``refine // 3`` to cancel the second-order
        error of the box scheme; needs ``refine`` divisible by 3.

    Returns
    -------
    (field_out, spin_out) as pairs of arrays on ``grid``.
    """
    if refine < 1 or refine % 2 == 0:
        raise OracleError("refine must be a positive odd integer")
    if params.A == 0:
        raise OracleError("oracle needs nonzero coupling")

    def run(r):
        nt, nz = grid.n_t * r, grid.n_z * r
        dt, dz = grid.T / nt, grid.L / nz
        tf = (np.arange(nt) + 0.5) * dt
        zf = (np.arange(nz) + 0.5) * dz
        outs = []
        for idx, s in ((0, 1.0), (1, -1.0)):
            x = _fine_inputs(field_in[idx], grid.n_t, r, tf)
            y = _fine_inputs(spin_in[idx], grid.n_z, r, zf)
            shape = x.shape[1:]
            xo, yo = _box_march(params, nt, nz, dt, dz, x.reshape(nt, -1), y.reshape(nz, -1), s)
            outs.append((xo[r // 2::r].reshape((grid.n_t,) + shape),
                         yo[r // 2::r].reshape((grid.n_z,) + shape)))
        return outs

    if richardson and refine % 3:
        raise OracleError("Richardson extrapolation needs refine divisible by 3")
    fine = run(refine)
    if richardson:
        coarse = run(refine // 3)
        w = 9.0
        fine = [tuple((w * f - c) / (w - 1) for f, c in zip(fc, cc)) for fc, cc in zip(fine, coarse)]
    for pair in fine:
        for arr in pair:
            if not np.all(np.isfinite(arr)):
                raise OracleError("oracle produced non-finite values")
    (fI, sI), (fIII, sIII) = fine
    return (fI, fIII), (sI, sIII)

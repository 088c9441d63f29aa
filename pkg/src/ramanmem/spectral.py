"""Gaussian covariance bookkeeping and spectral Mandel parameters.

States are stored in vacuum-noise units: every sample is divided by the
square root of its shot-noise variance, so vacuum is the identity. The
stacked order is (Xi_I, Xi_III, T_I, T_III), all in the rotated frame.
Light samples are normalized by Xi2/dt and spin samples by
cbar13 |Fz| / (2 dz).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dct

from .propagator import Grid, GridMismatchError, TransferMatrix

CHANNELS = ("Xi_I", "Xi_III", "T_I", "T_III")


@dataclass(frozen=True)
class SqueezedInput:
    """Squeezed-vacuum statistics of the probe.

    ``xi1 < 0`` is the squeezed and ``xi3 > 0`` the anti-squeezed excess.
    ``broadband`` selects the delta-correlated limit (1 + xi) delta(tau).
    """

    xi1: float
    xi3: float
    tau1: float = 0.0
    tau3: float = 0.0
    gammaC: float = math.inf
    kappaD: float = 0.0
    broadband: bool = True

    def __post_init__(self):
        if abs((1 + self.xi1) * (1 + self.xi3) - 1) > 1e-9:
            raise ValueError("input must be minimal uncertainty: (1+xi1)(1+xi3) = 1")
        if self.tau3 < self.tau1:
            raise ValueError("tau3 must not be shorter than tau1")
        if not self.broadband and self.tau1 <= 0:
            raise ValueError("finite-bandwidth input needs positive correlation times")

    @classmethod
    def from_cavity(cls, gammaC: float, kappaD: float) -> "SqueezedInput":
        """Below-threshold degenerate parametric amplifier output.

        With x = 2 kappaD / gammaC the zero-frequency variances are
        ((1 -/+ x)/(1 +/- x))^2 and the Lorentzian widths give tau1, tau3.
        """
        if not 0 <= kappaD < gammaC / 2:
            raise ValueError("need 0 <= kappaD < gammaC/2 (below threshold)")
        x = 2 * kappaD / gammaC
        return cls(xi1=-4 * x / (1 + x) ** 2, xi3=4 * x / (1 - x) ** 2,
                   tau1=1 / (gammaC / 2 + kappaD), tau3=1 / (gammaC / 2 - kappaD),
                   gammaC=gammaC, kappaD=kappaD, broadband=False)

    @classmethod
    def from_antisqueezing(cls, one_plus_xi3: float, tau_c: float | None = None) -> "SqueezedInput":
        """Input with 1 + xi3 given; ``tau_c`` (= tau3) None means broadband."""
        if one_plus_xi3 < 1:
            raise ValueError("1 + xi3 must be >= 1")
        xi3 = one_plus_xi3 - 1
        xi1 = 1 / one_plus_xi3 - 1
        if tau_c is None:
            return cls(xi1=xi1, xi3=xi3)
        r = math.sqrt(one_plus_xi3)
        x = (r - 1) / (r + 1)
        gamma = 2 / (tau_c * (1 - x))
        return cls(xi1=xi1, xi3=xi3, tau1=tau_c / r, tau3=tau_c, gammaC=gamma,
                   kappaD=x * gamma / 2, broadband=False)

    @property
    def tau_c(self) -> float:
        return self.tau3

    def spectrum(self, omega, channel: int = 1):
        """Analytic Mandel parameter 1 + xi / (1 + omega^2 tau^2)."""
        xi, tau = (self.xi1, self.tau1) if channel == 1 else (self.xi3, self.tau3)
        omega = np.asarray(omega, float)
        if self.broadband:
            return np.full_like(omega, 1 + xi)
        return 1 + xi / (1 + (omega * tau) ** 2)


@dataclass(frozen=True)
class GaussianState:
    """Symmetrized covariance in vacuum-noise units plus grid metadata.

    ``factor`` optionally holds F with cov = F F^T. Quadratic forms taken
    through the factor avoid the cancellation that strongly amplifying
    transfers cause in the explicit covariance.
    """

    cov: np.ndarray
    grid: Grid
    Xi2_bar: float = 1.0
    Fz_bar: float = 1.0
    cbar13: float = 0.5
    factor: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        n = 2 * (self.grid.n_t + self.grid.n_z)
        if self.cov.shape != (n, n):
            raise GridMismatchError(f"covariance must be {n}x{n}")

    def slice(self, channel: str) -> slice:
        nt, nz = self.grid.n_t, self.grid.n_z
        starts = {"Xi_I": (0, nt), "Xi_III": (nt, nt), "T_I": (2 * nt, nz), "T_III": (2 * nt + nz, nz)}
        a, m = starts[channel]
        return slice(a, a + m)

    def block(self, row: str, col: str | None = None) -> np.ndarray:
        return self.cov[self.slice(row), self.slice(col or row)]

    @property
    def shot_noise(self) -> np.ndarray:
        """Physical vacuum standard deviations of the stacked samples."""
        g = self.grid
        f = np.full(g.n_t, math.sqrt(self.Xi2_bar / g.dt))
        s = np.full(g.n_z, math.sqrt(self.cbar13 * abs(self.Fz_bar) / (2 * g.dz)))
        return np.concatenate([f, f, s, s])

    def variance(self, u: np.ndarray) -> float:
        """u^T cov u, evaluated through the factor when one is stored."""
        if self.factor is not None:
            w = self.factor.T @ u
            return float(w @ w)
        return float(u @ self.cov @ u)

    def physical_cov(self) -> np.ndarray:
        s = self.shot_noise
        return self.cov * np.outer(s, s)


def _exp_cell_matrix(n: int, d: float, xi: float, tau: float) -> np.ndarray:
    """Cell-averaged xi e^{-|t|/tau}/(2 tau), in units of the shot noise 1/d."""
    if tau <= 0:
        return xi * np.eye(n)
    r = d / tau
    idx = np.arange(n)
    k = np.abs(idx[:, None] - idx[None, :])
    # e^{-r k} (2 sinh(r/2))^2 / (2 r), written as e^{-r (k-1)} (1 - e^{-r})^2 / (2 r)
    off = xi * np.exp(-r * np.maximum(k - 1, 0)) * np.expm1(-r) ** 2 / (2 * r)
    diag = xi * (1 - (-np.expm1(-r)) / r)
    return np.where(k == 0, diag, off)


def input_field_covariance(sq: SqueezedInput, grid: Grid, Xi2_bar: float = 1.0):
    """Normalized covariance blocks (Xi_I, Xi_III) of the squeezed probe.

    Samples are cell amplitudes, so the exponential correlator is averaged
    exactly over pairs of cells; the broadband flag gives (1 + xi) I.
    The two quadratures are uncorrelated.
    """
    n, d = grid.n_t, grid.dt
    if sq.broadband:
        return (1 + sq.xi1) * np.eye(n), (1 + sq.xi3) * np.eye(n)
    c1 = np.eye(n) + _exp_cell_matrix(n, d, sq.xi1, sq.tau1)
    c3 = np.eye(n) + _exp_cell_matrix(n, d, sq.xi3, sq.tau3)
    return c1, c3


def input_spin_covariance(grid: Grid, Fz_bar: float = 1.0, cbar13: float = 0.5):
    """Coherent spin state: both alignment channels at the shot-noise floor."""
    eye = np.eye(grid.n_z)
    return eye.copy(), eye.copy()


def initial_state(grid: Grid, params, squeezed: SqueezedInput | None = None) -> GaussianState:
    """Squeezed (or vacuum) light with coherent spins, uncorrelated."""
    nt, nz = grid.n_t, grid.n_z
    cov = np.zeros((2 * (nt + nz),) * 2)
    if squeezed is None:
        f1 = f3 = np.eye(nt)
    else:
        f1, f3 = input_field_covariance(squeezed, grid, params.Xi2_bar)
    s1, s3 = input_spin_covariance(grid, params.Fz_bar, params.cbar13)
    fac = np.zeros_like(cov)
    for a, blk in zip((0, nt, 2 * nt, 2 * nt + nz), (f1, f3, s1, s3)):
        m = blk.shape[0]
        cov[a:a + m, a:a + m] = blk
        fac[a:a + m, a:a + m] = np.linalg.cholesky(blk)
    return GaussianState(cov, grid, params.Xi2_bar, params.Fz_bar, params.cbar13, fac)


def stacked_matrix(tm: TransferMatrix) -> np.ndarray:
    """Normalized transfer on the (Xi_I, Xi_III, T_I, T_III) vector."""
    nt, nz = tm.grid.n_t, tm.grid.n_z
    MI, MIII = tm.normalized("I"), tm.normalized("III")
    idx_I = np.r_[0:nt, 2 * nt:2 * nt + nz]
    idx_III = np.r_[nt:2 * nt, 2 * nt + nz:2 * nt + 2 * nz]
    M = np.zeros((2 * (nt + nz),) * 2)
    M[np.ix_(idx_I, idx_I)] = MI
    M[np.ix_(idx_III, idx_III)] = MIII
    return M


def propagate(state: GaussianState, tm: TransferMatrix) -> GaussianState:
    """cov_out = M cov M^T with M the stacked normalized transfer."""
    if state.grid != tm.grid:
        raise GridMismatchError("state and transfer grids differ")
    M = stacked_matrix(tm)
    p = tm.params
    if state.factor is not None:
        fac = M @ state.factor
        cov = fac @ fac.T
    else:
        fac = None
        cov = M @ state.cov @ M.T
    cov = 0.5 * (cov + cov.T)
    return GaussianState(cov, state.grid, p.Xi2_bar, p.Fz_bar, p.cbar13, fac)


@dataclass(frozen=True)
class MandelSpectrum:
    """Mode-resolved normalized variance 1 + xi of one channel."""

    abscissa: np.ndarray
    values: np.ndarray
    channel: str
    domain: str

    @property
    def modes(self) -> np.ndarray:
        return np.arange(self.values.size)


def cosine_basis(n: int) -> np.ndarray:
    """Orthonormal standing-wave basis; row k is cos(pi k (i + 1/2) / n)."""
    return dct(np.eye(n), type=2, norm="ortho", axis=0)


def mode_variances(block: np.ndarray) -> np.ndarray:
    """Diagonal of the covariance block in the cosine basis."""
    B = dct(dct(block, type=2, norm="ortho", axis=0), type=2, norm="ortho", axis=1)
    return np.diag(B).copy()


def mandel_spectrum(state: GaussianState, channel: str) -> MandelSpectrum:
    """Mandel parameters of ``channel`` on the cosine modes.

    Light channels are indexed by Omega_k = pi k / T, spin channels by
    q_k = pi k / L.
    """
    if channel not in CHANNELS:
        raise ValueError(f"unknown channel {channel!r}")
    vals = mode_variances(state.block(channel))
    if channel.startswith("Xi"):
        ab, dom = np.pi * np.arange(vals.size) / state.grid.T, "time"
    else:
        ab, dom = np.pi * np.arange(vals.size) / state.grid.L, "space"
    return MandelSpectrum(ab, vals, channel, dom)


def total_noise(state: GaussianState) -> float:
    """Trace of the normalized covariance (conserved by passive maps)."""
    return float(np.trace(state.cov))


def heisenberg_products(state: GaussianState, kind: str = "Xi") -> np.ndarray:
    """Per-mode (1 + xi_I)(1 + xi_III) for light (``"Xi"``) or spin (``"T"``)."""
    a = mandel_spectrum(state, f"{kind}_I").values
    b = mandel_spectrum(state, f"{kind}_III").values
    return a * b

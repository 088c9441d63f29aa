"""Write, store and retrieve protocol for squeezed light in the spin memory."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coupling import InterfaceParams, scenario_params
from .propagator import Grid, build_transfer
from .spectral import GaussianState, SqueezedInput, initial_state, propagate


class ProtocolError(ValueError):
    """Inconsistent protocol parameters."""


@dataclass(frozen=True)
class ProtocolRun:
    """Write and read stage parameters plus the probe statistics.

    Both stages act on the same sample (same L and n_z); the read pulse may
    have its own duration T' and time grid.
    """

    write: InterfaceParams
    read: InterfaceParams
    input: SqueezedInput
    n: int = 256
    n_read: int | None = None
    optimal_retrieval: bool = True

    def __post_init__(self):
        if not (self.write.A < 0 and self.read.A < 0):
            raise ProtocolError("memory protocol needs A < 0 and A' < 0")
        if self.write.L != self.read.L:
            raise ProtocolError("write and read stages must share the sample length")

    @property
    def write_grid(self) -> Grid:
        return Grid(self.n, self.n, self.write.T, self.write.L)

    @property
    def read_grid(self) -> Grid:
        return Grid(self.n_read or self.n, self.n, self.read.T, self.read.L)

    @property
    def broadband(self) -> bool:
        return self.input.broadband


def snap_kappa1(kappa1: float, L: float) -> float:
    """Nearest gyrotropy with kappa1 L a multiple of 2 pi."""
    return 2 * math.pi * round(kappa1 * L / (2 * math.pi)) / L


def make_run(write_ATL: float, read_ATL: float, one_plus_xi3: float,
             tau_c_over_T: float | None = None, n: int = 256, T: float = 1.0, L: float = 1.0,
             read_T: float | None = None, kappa1: float = 0.0, optimal_retrieval: bool = True,
             N_A: float = 1e6, N_P: float = 1e6) -> ProtocolRun:
    """Protocol in natural units from the cooperative parameters.

    The read pulse reuses the sample (same epsilon and Fz) and differs only
    in probe flux and duration, so A' T' L / (A T L) = N_P' / N_P.
    """
    if write_ATL >= 0 or read_ATL >= 0:
        raise ProtocolError("memory cooperative parameters must be negative")
    if optimal_retrieval:
        kappa1 = snap_kappa1(kappa1, L)
    w = scenario_params(write_ATL, T=T, L=L, N_A=N_A, N_P=N_P, kappa1=kappa1)
    Tr = T if read_T is None else read_T
    xi2_read = read_ATL / (-2 * w.cbar13 * w.epsilon**2 * w.Fz_bar * Tr * L)
    r = w.replace(Xi2_bar=xi2_read, T=Tr)
    tau_c = None if tau_c_over_T is None else T / tau_c_over_T
    sq = SqueezedInput.from_antisqueezing(one_plus_xi3, tau_c)
    return ProtocolRun(w, r, sq, n=n, optimal_retrieval=optimal_retrieval)


def run_write(run: ProtocolRun) -> GaussianState:
    """Propagate squeezed light and coherent spins through the write stage."""
    g = run.write_grid
    st = initial_state(g, run.write, run.input)
    return propagate(st, build_transfer(run.write, g))


def read_input_state(post_write: GaussianState, run: ProtocolRun) -> GaussianState:
    """Fresh vacuum light with the stored spin marginal."""
    g = run.read_grid
    st = initial_state(g, run.read, None)
    nt = 2 * g.n_t
    spins = np.r_[post_write.slice("T_I"), post_write.slice("T_III")]
    cov = st.cov.copy()
    cov[nt:, nt:] = post_write.cov[np.ix_(spins, spins)]
    return GaussianState(cov, g, run.read.Xi2_bar, run.read.Fz_bar, run.read.cbar13)


def run_read(post_write: GaussianState, run: ProtocolRun) -> GaussianState:
    """Retrieve the stored spin state onto a second probe pulse."""
    if post_write.grid.n_z != run.read_grid.n_z:
        raise ProtocolError("stored state and read grid differ in n_z")
    st = read_input_state(post_write, run)
    return propagate(st, build_transfer(run.read, run.read_grid))


def regime_windows(run: ProtocolRun) -> dict:
    """Margins of the write-in and retrieval inequalities.

    Every ``*_ratio`` entry should be small (left side over right side of
    a "much less than" relation).
    """
    w, r = run.write, run.read
    A, T, L = abs(w.A), w.T, w.L
    Ar, Tr = abs(r.A), r.T
    tau_c = 0.0 if run.input.broadband else run.input.tau_c
    q_c = math.sqrt(A * T / L)
    l_c = 1 / q_c
    om_c = math.sqrt(Ar * L / Tr)
    out = {
        "q_c": q_c,
        "l_c": l_c,
        "Omega_c_read": om_c,
        "write_bandwidth_ratio": A * tau_c / q_c,
        "write_length_ratio": 1 / (L * q_c),
        "read_correlation_ratio": Ar * l_c / om_c,
        "read_duration_ratio": 1 / (Tr * om_c),
        "collective_lower_ratio": A * tau_c * L,
        "collective_upper_ratio": 1 / (L * q_c),
    }
    out["collective_window"] = (out["collective_lower_ratio"] < 1) and (out["collective_upper_ratio"] < 1)
    return out


def optimize_readout_mode(retrieved: GaussianState):
    """Minimum-variance temporal mode of the retrieved squeezed channel.

    Returns ``(mode, (v1, v3))`` with ``mode`` normalized in the discrete
    L2 norm, ``v1`` its Xi_I variance and ``v3`` the Xi_III variance of the
    same mode, both in vacuum units.
    """
    c1 = retrieved.block("Xi_I")
    c3 = retrieved.block("Xi_III")
    w, v = np.linalg.eigh(c1)
    h = v[:, 0]
    h = h * np.sign(h.sum() or 1.0)
    return h, (float(w[0]), float(h @ c3 @ h))


def mode_variance_pairs(retrieved: GaussianState, kind: str = "Xi"):
    """All eigenmodes of the I-channel block with their (v1, v3) pairs."""
    c1 = retrieved.block(f"{kind}_I")
    c3 = retrieved.block(f"{kind}_III")
    w, v = np.linalg.eigh(c1)
    v3 = np.einsum("ik,ij,jk->k", v, c3, v)
    return v, w, v3


def quantum_fidelity(input: SqueezedInput, out_pair) -> float:
    """Overlap 2 / sqrt((2 + xi1 + xi1') (2 + xi3 + xi3')) of two squeezed states."""
    x1o, x3o = out_pair
    a = 2 + input.xi1 + x1o
    b = 2 + input.xi3 + x3o
    if 1 + input.xi1 <= 0 or 1 + x1o <= 0 or 1 + input.xi3 <= 0 or 1 + x3o <= 0:
        raise ValueError("Mandel parameters 1 + xi must be positive")
    return 2.0 / math.sqrt(a * b)


def classical_benchmark(input: SqueezedInput, T: float, N_attempts):
    """Fidelity and admissibility of an N-attempt homodyne estimate.

    F = 1/sqrt(1 + (D3 theta_N)^2) with D3 = (1 + xi3)/2, theta_N = pi/N and
    admissibility sqrt(tau_c / T_N) < (D3 theta_N)^2 < 1 with T_N = T/N.
    Vectorized over ``N_attempts``.
    """
    N = np.asarray(N_attempts, dtype=float)
    if np.any(N < 1):
        raise ValueError("N must be >= 1")
    D3 = (1 + input.xi3) / 2
    x = D3 * np.pi / N
    F = 1 / np.sqrt(1 + x * x)
    ok = (np.sqrt(input.tau_c * N / T) < x * x) & (x * x < 1)
    if np.ndim(N_attempts) == 0:
        return float(F), bool(ok)
    return F, ok


def best_classical(input: SqueezedInput, T: float, N_max: int = 10**6):
    """Best admissible classical fidelity over every N in [1, N_max].

    Returns ``(F, N)`` or ``(None, None)`` when no N satisfies the constraint.
    """
    N = np.arange(1, N_max + 1)
    F, ok = classical_benchmark(input, T, N)
    if not ok.any():
        return None, None
    i = int(np.argmax(np.where(ok, F, -1.0)))
    return float(F[i]), int(N[i])


@dataclass
class FidelityReport:
    quantum_F: float
    classical_F: float | None
    classical_constraint_ok: bool
    chosen_mode: np.ndarray = field(repr=False)
    mode_variances: tuple = (1.0, 1.0)
    classical_N: int | None = None

    def as_dict(self) -> dict:
        return {"quantum_F": self.quantum_F, "classical_F": self.classical_F,
                "classical_constraint_ok": self.classical_constraint_ok,
                "classical_N": self.classical_N,
                "mode_variance_xi1": self.mode_variances[0],
                "mode_variance_xi3": self.mode_variances[1]}


def fidelity_report(run: ProtocolRun, state: GaussianState, kind: str = "Xi") -> FidelityReport:
    """Best eigenmode fidelity against the best admissible classical scheme.

    Candidate modes are the eigenmodes of the squeezed channel of ``state``;
    the one with the largest overlap with the input is kept. ``kind="Xi"``
    scores the retrieved light, ``kind="T"`` the stored spin wave.
    """
    if kind not in ("Xi", "T"):
        raise ValueError("kind must be 'Xi' or 'T'")
    v, w1, w3 = mode_variance_pairs(state, kind)
    valid = (w1 > 0) & (w3 > 0)
    F = np.full(w1.size, -1.0)
    x1, x3 = run.input.xi1, run.input.xi3
    F[valid] = 2.0 / np.sqrt((2 + x1 + w1[valid] - 1) * (2 + x3 + w3[valid] - 1))
    k = int(np.argmax(F))
    if run.input.broadband:
        cF, cN = None, None
    else:
        cF, cN = best_classical(run.input, run.write.T)
    return FidelityReport(float(F[k]), cF, cF is not None, v[:, k], (float(w1[k]), float(w3[k])), cN)

"""Spectrally dependent coupling constants and the cooperative parameter.

The polarizability pieces are evaluated in Gaussian (CGS) units so that
they are dimensionless: frequencies in rad/s, areas in cm^2, dipoles in
esu cm. Everything downstream only needs the products A*T*L, kappa1*L.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from .angular import HalfInt, alignment_coefficients, wigner6j

HBAR_CGS = 1.054571817e-27  # erg s
C_CGS = 2.99792458e10  # cm/s
SI_TO_ESU_CM = 2.99792458e11  # 1 C m in esu cm

PASS_RATIO = 0.1
WARN_RATIO = 1.0


class CouplingError(ValueError):
    """Invalid coupling input."""


class LineDataError(CouplingError):
    """Malformed line-data file; message carries the line number."""


class ResonanceError(CouplingError):
    """Evaluation exactly on a transition frequency."""


@dataclass(frozen=True)
class HyperfineLine:
    """One F0 -> F hyperfine transition.

    Attributes
    ----------
    F0, F : HalfInt
        Ground and excited total angular momenta.
    omega_FF0 : float
        Transition angular frequency [rad/s].
    d_F0F_sq : float
        Squared reduced dipole moment [esu^2 cm^2].
    """

    F0: HalfInt
    F: HalfInt
    omega_FF0: float
    d_F0F_sq: float

    def __post_init__(self):
        if abs(self.F.twice_value - self.F0.twice_value) > 2:
            raise CouplingError("|F - F0| must be <= 1")
        if not self.omega_FF0 > 0:
            raise CouplingError("transition frequency must be positive")
        if self.d_F0F_sq < 0:
            raise CouplingError("squared dipole must be nonnegative")


@dataclass(frozen=True)
class LineTable:
    """Parsed line-data file."""

    lines: tuple
    reference_hz: float

    def for_ground(self, F0) -> tuple:
        f0 = HalfInt.of(F0)
        return tuple(ln for ln in self.lines if ln.F0 == f0)

    def omega_of(self, F0, F) -> float:
        f0, f = HalfInt.of(F0), HalfInt.of(F)
        for ln in self.lines:
            if ln.F0 == f0 and ln.F == f:
                return ln.omega_FF0
        raise CouplingError(f"no line F0={F0} -> F={F}")


def parse_lines(text: str, source: str = "<string>") -> LineTable:
    """Parse the line-data grammar.

    Grammar: ``#`` starts a comment; blank lines are ignored; header lines
    are ``key = value`` with keys ``reference_THz``, ``dipole_unit``
    (``SI`` or ``CGS``) and ``reduced_dipole``; every other line is a
    record ``F0 F offset_MHz weight`` with F0, F integers or ``n/2``
    and weight a decimal or fraction.
    """
    header = {}
    records = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" in body:
            key, _, value = (s.strip() for s in body.partition("="))
            if key not in ("reference_THz", "dipole_unit", "reduced_dipole"):
                raise LineDataError(f"{source}:{lineno}: unknown header key {key!r}")
            header[key] = (value, lineno)
            continue
        parts = body.split()
        if len(parts) != 4:
            raise LineDataError(f"{source}:{lineno}: expected 'F0 F offset_MHz weight', got {body!r}")
        try:
            F0, F = HalfInt.of(parts[0]), HalfInt.of(parts[1])
            offset = float(parts[2])
            weight = float(Fraction(parts[3]))
        except (ValueError, ZeroDivisionError) as exc:
            raise LineDataError(f"{source}:{lineno}: {exc}") from None
        records.append((lineno, F0, F, offset, weight))
    for key in ("reference_THz", "dipole_unit", "reduced_dipole"):
        if key not in header:
            raise LineDataError(f"{source}: missing header key {key!r}")
    try:
        ref_hz = float(header["reference_THz"][0]) * 1e12
        dip = float(header["reduced_dipole"][0])
    except ValueError as exc:
        lineno = header["reference_THz"][1]
        raise LineDataError(f"{source}:{lineno}: {exc}") from None
    unit = header["dipole_unit"][0].upper()
    if unit == "SI":
        dip *= SI_TO_ESU_CM
    elif unit != "CGS":
        raise LineDataError(f"{source}:{header['dipole_unit'][1]}: dipole_unit must be SI or CGS")
    if not records:
        raise LineDataError(f"{source}: no transition records")
    lines = []
    for lineno, F0, F, offset, weight in records:
        try:
            lines.append(HyperfineLine(F0, F, 2 * math.pi * (ref_hz + offset * 1e6), weight * dip * dip))
        except CouplingError as exc:
            raise LineDataError(f"{source}:{lineno}: {exc}") from None
    return LineTable(tuple(lines), ref_hz)


def load_lines(path=None) -> LineTable:
    """Load a line file; the shipped 87Rb D1 table when ``path`` is None."""
    if path is None:
        text = resources.files("ramanmem").joinpath("data/rb87_d1.lines").read_text()
        return parse_lines(text, "rb87_d1.lines")
    p = Path(path)
    return parse_lines(p.read_text(), str(p))


def _polarizability(line: HyperfineLine, omega_bar: float, S0: float) -> float:
    """Common factor 4*pi*w/(S0 c) * |d|^2 / (-hbar (w - w_FF0))."""
    det = omega_bar - line.omega_FF0
    if det == 0:
        raise ResonanceError(f"omega_bar on resonance with F0={line.F0} -> F={line.F}")
    return 4 * math.pi * omega_bar / (S0 * C_CGS) * line.d_F0F_sq / (-HBAR_CGS * det)


def _sign(twice_sum: int) -> int:
    return -1 if (twice_sum // 2) % 2 else 1


def alpha1(line: HyperfineLine, omega_bar: float, S0: float) -> float:
    """Orientation part of the polarizability for one transition."""
    six = wigner6j(1, 1, 1, line.F0, line.F0, line.F)
    sign = _sign(line.F.twice_value + line.F0.twice_value)
    return sign * six / math.sqrt(2) * _polarizability(line, omega_bar, S0)


def alpha2(line: HyperfineLine, omega_bar: float, S0: float) -> float:
    """Alignment part of the polarizability for one transition."""
    six = wigner6j(1, 1, 2, line.F0, line.F0, line.F)
    sign = _sign(2 + line.F.twice_value + line.F0.twice_value)
    return sign * six * _polarizability(line, omega_bar, S0)


def _orientation_sum(lines, omega_bar, S0, F0) -> float:
    f = float(HalfInt.of(F0))
    total = sum(alpha1(ln, omega_bar, S0) for ln in lines if ln.F0 == HalfInt.of(F0))
    return total * math.sqrt(3.0) / math.sqrt(f * (f + 1) * (2 * f + 1))


def kappa1(lines, omega_bar: float, Fz_bar: float, F0, S0: float = 1.0) -> float:
    """Gyrotropy constant [1/length] summed over lines from ``F0``."""
    return _orientation_sum(lines, omega_bar, S0, F0) * Fz_bar


def omega1(lines, omega_bar: float, Xi2_bar: float, F0, S0: float = 1.0) -> float:
    """Light shift [rad/s] summed over lines from ``F0``."""
    return _orientation_sum(lines, omega_bar, S0, F0) * Xi2_bar


def epsilon(lines, omega_bar: float, S0: float = 1.0, F0=None) -> float:
    """Alignment coupling constant, half the summed alpha2.

    Lines whose ground level differs from ``F0`` are skipped when ``F0`` is given.
    """
    sel = lines if F0 is None else [ln for ln in lines if ln.F0 == HalfInt.of(F0)]
    return 0.5 * sum(alpha2(ln, omega_bar, S0) for ln in sel)


def omega_at_detuning(table: LineTable, F0, F, detuning_mhz):
    """Carrier angular frequency detuned from the F0 -> F resonance."""
    return table.omega_of(F0, F) + 2 * math.pi * 1e6 * np.asarray(detuning_mhz, float)


@dataclass(frozen=True)
class CouplingSweep:
    """Coupling constants sampled against detuning from one resonance.

    Samples exactly on a line are dropped and counted in ``skipped``.
    """

    detuning_mhz: np.ndarray
    kappa1: np.ndarray
    Omega1: np.ndarray
    epsilon: np.ndarray
    A: np.ndarray
    skipped: int = 0

    def rows(self):
        return np.column_stack([self.detuning_mhz, self.kappa1, self.Omega1, self.epsilon, self.A])


def coupling_sweep(table: LineTable, F0, F, detuning_mhz, Fz_bar: float = 1.0,
                   Xi2_bar: float = 1.0, S0: float = 1.0) -> CouplingSweep:
    """kappa1, Omega1, epsilon and A against detuning from F0 -> F."""
    lines = table.for_ground(F0)
    if not lines:
        raise CouplingError(f"no lines from F0={F0}")
    cb = float(alignment_coefficients(F0).cbar13)
    det = np.asarray(detuning_mhz, float)
    w = omega_at_detuning(table, F0, F, det)
    keep = np.array([all(wi != ln.omega_FF0 for ln in lines) for wi in w], dtype=bool)
    det, w = det[keep], w[keep]
    k1 = np.array([kappa1(lines, wi, Fz_bar, F0, S0) for wi in w])
    o1 = np.array([omega1(lines, wi, Xi2_bar, F0, S0) for wi in w])
    ep = np.array([epsilon(lines, wi, S0, F0) for wi in w])
    A = -2 * cb * ep**2 * Xi2_bar * Fz_bar
    return CouplingSweep(det, k1, o1, ep, A, int((~keep).sum()))


def kappa1_zeros(table: LineTable, F0, F, lo_mhz: float, hi_mhz: float,
                 samples: int = 4001) -> list:
    """Detunings [MHz] from F0 -> F where the gyrotropy vanishes.

    Sign changes are bracketed on a sample grid and refined with brentq;
    brackets that straddle a resonance (a pole, not a zero) are dropped.
    """
    from scipy.optimize import brentq

    lines = table.for_ground(F0)
    ref = table.omega_of(F0, F)
    poles = sorted((ln.omega_FF0 - ref) / (2 * math.pi * 1e6) for ln in lines)

    def f(d):
        return _orientation_sum(lines, ref + 2 * math.pi * 1e6 * d, 1.0, F0)

    grid = np.linspace(lo_mhz, hi_mhz, samples)
    grid = grid[[all(g != p for p in poles) for g in grid]]
    vals = np.array([f(d) for d in grid])
    out = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa == 0:
            out.append(float(a))
        elif fa * fb < 0 and not any(a < p < b for p in poles):
            out.append(float(brentq(f, a, b, xtol=1e-9)))
    return out


@dataclass(frozen=True)
class InterfaceParams:
    """Classical parameters of the light-atom interface.

    ``A``, ``N_P`` and ``N_A`` are derived and recomputed on every
    :meth:`replace`.
    """

    epsilon: float
    Xi2_bar: float
    Fz_bar: float
    L: float
    T: float
    F0: Fraction = Fraction(1)
    kappa1: float = 0.0
    Omega1: float = 0.0
    OmegaBar: float = 0.0
    S0: float = 1.0
    cbar13: float = field(init=False)
    A: float = field(init=False)
    N_P: float = field(init=False)
    N_A: float = field(init=False)

    def __post_init__(self):
        if not (self.L > 0 and self.T > 0):
            raise CouplingError("L and T must be positive")
        F0 = Fraction(self.F0)
        object.__setattr__(self, "F0", F0)
        object.__setattr__(self, "cbar13", float(alignment_coefficients(F0).cbar13))
        object.__setattr__(self, "A", -2 * self.cbar13 * self.epsilon**2 * self.Xi2_bar * self.Fz_bar)
        object.__setattr__(self, "N_P", self.Xi2_bar * self.T)
        object.__setattr__(self, "N_A", abs(self.Fz_bar * self.L) / float(F0))

    @property
    def ATL(self) -> float:
        return self.A * self.T * self.L

    @property
    def branch(self) -> str:
        if self.A < 0:
            return "memory"
        if self.A > 0:
            return "entanglement"
        return "degenerate"

    def replace(self, **changes) -> "InterfaceParams":
        return dataclasses.replace(self, **changes)


def cooperative_A(params: InterfaceParams) -> float:
    """A = -2 cbar13 eps^2 Xi2 Fz, recomputed from the stored inputs."""
    return -2 * params.cbar13 * params.epsilon**2 * params.Xi2_bar * params.Fz_bar


def xi2_for_ATL(ATL: float, epsilon: float, L: float, T: float, Fz_bar: float, cbar13: float) -> float:
    """Probe flux Xi2 giving the requested A*T*L."""
    den = -2 * cbar13 * epsilon**2 * Fz_bar * T * L
    if den == 0:
        raise CouplingError("cannot reach ATL with zero coupling")
    xi2 = ATL / den
    if xi2 <= 0:
        raise CouplingError("sign of ATL inconsistent with sign of Fz_bar")
    return xi2


def scenario_params(ATL: float, T: float = 1.0, L: float = 1.0, F0=1, N_A: float = 1e6,
                    N_P: float = 1e6, **extra) -> InterfaceParams:
    """Interface parameters in natural units realizing a target A*T*L.

    The atom and photon numbers fix Fz_bar and Xi2_bar; epsilon is solved
    for. ATL < 0 gives the memory branch (Fz_bar > 0).
    """
    if ATL == 0:
        raise CouplingError("ATL must be nonzero")
    F0 = Fraction(F0)
    cb = float(alignment_coefficients(F0).cbar13)
    Fz = math.copysign(float(F0) * N_A / L, -ATL)
    Xi2 = N_P / T
    eps = math.sqrt(abs(ATL) / (2 * cb * Xi2 * abs(Fz) * T * L))
    return InterfaceParams(epsilon=eps, Xi2_bar=Xi2, Fz_bar=Fz, L=L, T=T, F0=F0, **extra)


@dataclass(frozen=True)
class CrossSections:
    """User-supplied incoherent scattering data (not derived here)."""

    sigma_minus: float
    sigma_plus: float
    lambda_bar: float | None = None


@dataclass
class Inequality:
    name: str
    lhs: float
    rhs: float
    relation: str  # ">>" or "<<"

    @property
    def margin(self) -> float:
        return self.lhs / self.rhs

    @property
    def ratio(self) -> float:
        """Small side over large side; small means well satisfied."""
        return self.rhs / self.lhs if self.relation == ">>" else self.lhs / self.rhs

    @property
    def status(self) -> str:
        if self.ratio < PASS_RATIO:
            return "pass"
        if self.ratio < WARN_RATIO:
            return "warn"
        return "fail"

    def as_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "relation": self.relation,
                "margin": self.margin, "status": self.status}


@dataclass
class FeasibilityReport:
    items: list
    optical_depth: float | None = None

    @property
    def status(self) -> str:
        states = {it.status for it in self.items}
        for s in ("fail", "warn"):
            if s in states:
                return s
        return "pass"

    def __getitem__(self, name) -> Inequality:
        for it in self.items:
            if it.name == name:
                return it
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {"status": self.status, "optical_depth": self.optical_depth,
                "inequalities": [it.as_dict() for it in self.items]}


def feasibility_check(params: InterfaceParams, read_params: InterfaceParams,
                      cross_sections: CrossSections) -> FeasibilityReport:
    """Check the atom/photon number limits of the memory protocol.

    A ``>>`` inequality passes when rhs/lhs < 0.1 and a ``<<`` one when
    lhs/rhs < 0.1; ratios below 1 warn and anything else fails.
    """
    vals = [params.epsilon, params.N_A, params.N_P, read_params.N_P, params.S0,
            cross_sections.sigma_minus, cross_sections.sigma_plus]
    if any(not v > 0 for v in vals):
        raise CouplingError("feasibility inputs must be positive")
    e2 = params.epsilon**2
    NA, NP, NPr, S0 = params.N_A, params.N_P, read_params.N_P, params.S0
    items = [
        Inequality("atoms_photons_write", e2 * NA * NP, 1.0, ">>"),
        Inequality("atoms_photons_read", read_params.epsilon**2 * NA * NPr, 1.0, ">>"),
        Inequality("read_photons", NPr, NP, "<<"),
        Inequality("atom_transparency", NA * cross_sections.sigma_minus, S0, "<<"),
        Inequality("write_scattering", NP * cross_sections.sigma_plus, S0, "<<"),
        Inequality("read_scattering", NPr * cross_sections.sigma_plus, S0, "<<"),
    ]
    od = None
    if cross_sections.lambda_bar is not None:
        od = NA * cross_sections.lambda_bar**2 / S0
    return FeasibilityReport(items, od)

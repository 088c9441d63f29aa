"""Command-line front end.

Subcommands ``coupling``, ``memory``, ``entangle``, ``plot`` and
``selftest``. Exit codes: 0 ok, 2 configuration or input error, 3 numeric
or solver error.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import logging
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .angular import AngularDomainError, alignment_coefficients, clebsch_gordan
from .config import ConfigError, ScenarioConfig, load_config
from .coupling import CouplingError, coupling_sweep, kappa1_zeros, load_lines, scenario_params
from .entangle import (SEPARABLE_BOUND, SolverError, entanglement_witness, epr_variance,
                       ppt_min_eigenvalue, run_entangle, solve_modes)
from .memory import (ProtocolError, fidelity_report, make_run, read_input_state, regime_windows,
                     run_read, run_write)
from .outputs import header_lines, write_csv, write_json
from .propagator import (DegenerateCouplingError, Grid, OracleError, apply_transfer, build_transfer,
                         pde_oracle, symplectic_residual)
from .spectral import initial_state, mandel_spectrum
from .svg import PlotError, plot_csv

log = logging.getLogger("ramanmem")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _spectra_rows(before, after, kind: str):
    """Columns and rows of the two-channel spectra before and after a stage."""
    chans = (f"{kind}_I", f"{kind}_III")
    specs = [(mandel_spectrum(st, ch)) for ch in chans for st in (before, after)]
    ab = specs[0].abscissa
    xname = "Omega" if kind == "Xi" else "q"
    cols = ["k", xname] + [f"{ch}.{tag}" for ch in chans for tag in ("in", "out")]
    rows = [[k, ab[k]] + [s.values[k] for s in specs] for k in range(ab.size)]
    return cols, rows


def _write_stage(out: Path, prefix: str, before, after, hdr) -> list:
    files = []
    for kind, name in (("Xi", "light"), ("T", "spin")):
        cols, rows = _spectra_rows(before, after, kind)
        files.append(write_csv(out / f"{prefix}_{name}.csv", cols, rows, hdr))
    return files


def cmd_coupling(cfg: ScenarioConfig, out: Path) -> list:
    v = cfg.values
    table = load_lines(v["coupling.lines"])
    F0, F = Fraction(v["coupling.F0"]), Fraction(v["coupling.F"])
    det = np.linspace(v["coupling.detuning_min"], v["coupling.detuning_max"], v["coupling.samples"])
    sw = coupling_sweep(table, F0, F, det, v["coupling.Fz_bar"], v["coupling.Xi2_bar"], v["coupling.S0"])
    zeros = kappa1_zeros(table, F0, F, det[0], det[-1], max(v["coupling.samples"], 2))
    hdr = header_lines(cfg.sha256, f"coupling sweep from F0={F0} -> F={F}; skipped on-resonance samples: {sw.skipped}")
    cols = ["detuning_MHz", "kappa1", "Omega1", "epsilon", "A"]
    files = [write_csv(out / "coupling.csv", cols, sw.rows().tolist(), hdr)]
    files.append(write_json(out / "coupling.json", {
        "F0": str(F0), "F": str(F), "kappa1_zeros_MHz": zeros, "skipped_samples": sw.skipped,
        "lines": [{"F0": str(ln.F0), "F": str(ln.F), "omega": ln.omega_FF0} for ln in table.for_ground(F0)],
    }, cfg.sha256))
    return files


def _protocol_runs(cfg: ScenarioConfig):
    runs = []
    for sc in cfg.scenarios():
        tau = sc["input.tau_c_over_T"]
        memory = cfg.mode == "memory"
        run = make_run(sc["write.ATL"], sc["read.ATL"] if memory else sc["write.ATL"],
                       1 + sc["input.xi3"], None if math.isinf(tau) else tau,
                       n=sc["grid.n"], T=sc["write.T"], L=sc["sample.L"],
                       read_T=sc.get("read.T") if memory else None, kappa1=sc["write.kappa1"],
                       optimal_retrieval=sc.get("flags.optimal_retrieval", True))
        if sc["grid.n_read"]:
            run = dataclasses.replace(run, n_read=sc["grid.n_read"])
        runs.append((sc, run))
    return runs


def cmd_memory(cfg: ScenarioConfig, out: Path) -> list:
    if cfg.mode not in ("memory", "spectra"):
        raise ConfigError(f"memory subcommand needs mode memory or spectra, got {cfg.mode!r}")
    files, report = [], []
    for i, (sc, run) in enumerate(_protocol_runs(cfg)):
        hdr = header_lines(cfg.sha256, f"scenario {i}")
        log.info("scenario %d: write ATL=%g", i, run.write.ATL)
        pre = initial_state(run.write_grid, run.write, run.input)
        post = run_write(run)
        files += _write_stage(out, f"s{i}_write", pre, post, hdr)
        stored = fidelity_report(run, post, "T")
        entry = {
            "write_ATL": run.write.ATL, "one_plus_xi1": 1 + run.input.xi1, "one_plus_xi3": 1 + run.input.xi3,
            "tau_c_over_T": None if run.broadband else run.write.T / run.input.tau_c,
            "n": run.n, "windows": regime_windows(run), "stored": stored.as_dict(),
        }
        if cfg.mode == "memory":
            log.info("scenario %d: read ATL=%g", i, run.read.ATL)
            rin = read_input_state(post, run)
            rout = run_read(post, run)
            files += _write_stage(out, f"s{i}_read", rin, rout, hdr)
            entry["read_ATL"] = run.read.ATL
            entry["retrieved"] = fidelity_report(run, rout, "Xi").as_dict()
        report.append(entry)
    files.append(write_json(out / "fidelity.json", {"mode": cfg.mode, "scenarios": report}, cfg.sha256))
    return files


def cmd_entangle(cfg: ScenarioConfig, out: Path) -> list:
    if cfg.mode != "entangle":
        raise ConfigError(f"entangle subcommand needs mode entangle, got {cfg.mode!r}")
    v = cfg.values
    files, rows, entries = [], [], []
    cols = ["ATL", "residual", "V1", "V3", "V_sum", "bound", "entangled", "ppt_nu_min", "iterations"]
    for i, atl in enumerate(v["entangle.ATL"]):
        hdr = header_lines(cfg.sha256, f"entangle ATL={atl!r}")
        p = scenario_params(atl)
        g = Grid.square(v["grid.n"], p)
        log.info("entangle ATL=%g n=%d", atl, g.n_t)
        pre = initial_state(g, p)
        st = run_entangle(p, g)
        modes = solve_modes(p, g, v["entangle.max_iter"], v["entangle.tol"])
        v1, v3 = epr_variance(st, modes)
        total, bound, ent = entanglement_witness(st, modes)
        nu = ppt_min_eigenvalue(st, modes)
        files += _write_stage(out, f"e{i}", pre, st, hdr)
        files.append(write_csv(out / f"e{i}_mode_h.csv", ["index", "t", "h"],
                               [[j, g.t[j], modes.h[j]] for j in range(g.n_t)], hdr))
        files.append(write_csv(out / f"e{i}_mode_g.csv", ["index", "z", "g"],
                               [[j, g.z[j], modes.g[j]] for j in range(g.n_z)], hdr))
        rows.append([atl, modes.residual, v1, v3, total, bound, ent, nu, modes.iterations])
        entries.append(dict(zip(cols, rows[-1])))
    hdr = header_lines(cfg.sha256, "EPR witness; vacuum gives V1 = V3 = 2")
    files.append(write_csv(out / "witness.csv", cols, rows, hdr))
    files.append(write_json(out / "witness.json", {
        "normalization": "unit-norm mode coefficients in vacuum units; uncorrelated vacua give V1 = V3 = 2",
        "separable_bound": SEPARABLE_BOUND, "results": entries}, cfg.sha256))
    return files


def _selftest_checks():
    """(name, value, tolerance, passed) for a fast deterministic self check."""
    checks = []
    for F0, c1, cb in ((1, Fraction(1, 2), Fraction(1, 2)), (2, Fraction(1, 10), Fraction(1, 14))):
        a = alignment_coefficients(F0)
        err = float(abs(a.c1 - c1) + abs(a.cbar13 - cb))
        checks.append((f"alignment_F0_{F0}", err, 1e-12, err <= 1e-12))
    s = sum(clebsch_gordan(1, m1, 1, 1 - m1, 2, 1) ** 2 for m1 in (0, 1))
    checks.append(("cg_normalization", abs(s - 1), 1e-12, abs(s - 1) <= 1e-12))
    rng = np.random.default_rng(0)
    for atl in (-5.0, 5.0):
        p = scenario_params(atl)
        g = Grid.square(32, p)
        tm = build_transfer(p, g)
        c = rng.normal(size=(4, 3))
        t, z = g.t / g.T, g.z / g.L
        fin = tuple(np.cos(np.pi * t * (1 + k)) * c[k, 0] + c[k, 1] for k in (0, 1))
        sin = tuple(np.cos(np.pi * z * (1 + k)) * c[k + 2, 0] + c[k + 2, 2] for k in (0, 1))
        (fk, sk) = apply_transfer(tm, fin, sin)
        (fo, so) = pde_oracle(p, g, fin, sin, refine=9)
        num = max(np.abs(a - b).max() for a, b in zip(fk + sk, fo + so))
        den = max(np.abs(b).max() for b in fo + so)
        checks.append((f"transfer_vs_oracle_ATL_{atl:+g}", num / den, 1e-3, num / den <= 1e-3))
        r = symplectic_residual(build_transfer(p, Grid.square(64, p)))
        checks.append((f"symplectic_ATL_{atl:+g}", r, 1e-2, r <= 1e-2))
    zeros = kappa1_zeros(load_lines(), 1, 1, -1000, 0, 1001)
    z0 = min(zeros, key=lambda d: abs(d + 205)) if zeros else math.nan
    checks.append(("kappa1_zero_offset_MHz", abs(z0 + 205), 20.0, abs(z0 + 205) <= 20))
    p = scenario_params(10.0)
    g = Grid.square(64, p)
    total, _, _ = entanglement_witness(run_entangle(p, g), solve_modes(p, g))
    checks.append(("witness_ATL_10", total, SEPARABLE_BOUND, total < SEPARABLE_BOUND))
    return checks


def cmd_selftest(out: Path) -> tuple[list, bool]:
    checks = _selftest_checks()
    tag = hashlib.sha256(f"selftest {__version__}".encode()).hexdigest()
    hdr = header_lines(tag, "selftest")
    files = [write_csv(out / "selftest.csv", ["check", "value", "tolerance", "passed"],
                       [[i, v, t, ok] for i, (_, v, t, ok) in enumerate(checks)], hdr + [
                           "checks: " + " ".join(f"{i}={n}" for i, (n, *_) in enumerate(checks))])]
    files.append(write_json(out / "selftest.json", {"checks": [
        {"name": n, "value": v, "tolerance": t, "passed": ok} for n, v, t, ok in checks]}, tag))
    return files, all(ok for *_, ok in checks)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ramanmem", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"ramanmem {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("coupling", "memory", "entangle"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="scenario config file")
        sp.add_argument("--out", help="output directory (overrides output.dir)")
        sp.add_argument("--grid", type=int, help="grid size (overrides grid.n)")
        sp.add_argument("--verbose", action="store_true")
    sp = sub.add_parser("plot")
    sp.add_argument("csv", nargs="+", help="CSV files to plot")
    sp.add_argument("--out", help="output directory (default: next to each CSV)")
    sp.add_argument("--verbose", action="store_true")
    sp = sub.add_parser("selftest")
    sp.add_argument("--out", default="selftest_out")
    sp.add_argument("--verbose", action="store_true")
    return ap


def _load(args) -> tuple[ScenarioConfig, Path]:
    cfg = load_config(args.config)
    if args.grid is not None:
        if "grid.n" not in cfg.values:
            raise ConfigError(f"--grid does not apply to mode {cfg.mode!r}")
        if args.grid < 1:
            raise ConfigError("--grid must be >= 1")
        cfg = cfg.with_overrides(**{"grid.n": args.grid})
    out = Path(args.out or cfg["output.dir"])
    return cfg, out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "plot":
            files = []
            for path in args.csv:
                target = None
                if args.out:
                    Path(args.out).mkdir(parents=True, exist_ok=True)
                    target = Path(args.out) / (Path(path).stem + ".svg")
                files.append(plot_csv(path, target))
        elif args.command == "selftest":
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            files, ok = cmd_selftest(out)
            for f in files:
                print(f)
            if not ok:
                print("selftest failed", file=sys.stderr)
                return EXIT_NUMERIC
            return EXIT_OK
        else:
            cfg, out = _load(args)
            if args.command == "coupling" and cfg.mode != "coupling":
                raise ConfigError(f"coupling subcommand needs mode coupling, got {cfg.mode!r}")
            out.mkdir(parents=True, exist_ok=True)
            cmd = {"coupling": cmd_coupling, "memory": cmd_memory, "entangle": cmd_entangle}[args.command]
            files = cmd(cfg, out)
    except (ConfigError, CouplingError, ProtocolError, PlotError, AngularDomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, OracleError, DegenerateCouplingError, np.linalg.LinAlgError,
            FloatingPointError, ArithmeticError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for f in files:
        print(f)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

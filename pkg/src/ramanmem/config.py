"""Flat key=value scenario configs with dotted keys.

One ``key = value`` per line, ``#`` comments. Keys listed in
:data:`SCHEMA` are the only ones accepted; list-valued keys take
comma-separated values and are zipped into scenarios (length-1 lists
broadcast).
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from pathlib import Path

MODES = ("memory", "spectra", "entangle", "coupling")
REQUIRED = object()


class ConfigError(ValueError):
    """Malformed, incomplete or inconsistent configuration."""


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _float(text: str) -> float:
    v = float(text)
    if math.isnan(v):
        raise ValueError("nan is not allowed")
    return v


def _floats(text: str) -> tuple:
    return tuple(_float(t) for t in text.split(",") if t.strip())


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise ValueError("must be >= 1")
    return v


_COMMON = {"mode": (str, REQUIRED), "seed": (int, 0), "output.dir": (str, "out")}
_PROTOCOL = {
    "grid.n": (_positive_int, 256),
    "grid.n_read": (_positive_int, None),
    "write.ATL": (_floats, REQUIRED),
    "write.T": (_float, 1.0),
    "write.kappa1": (_float, 0.0),
    "sample.L": (_float, 1.0),
    "input.xi3": (_floats, REQUIRED),
    "input.tau_c_over_T": (_floats, (math.inf,)),
}

# key -> (parser, default); per mode
SCHEMA = {
    "spectra": {**_COMMON, **_PROTOCOL},
    "memory": {**_COMMON, **_PROTOCOL,
               "read.ATL": (_floats, REQUIRED),
               "read.T": (_float, None),
               "flags.optimal_retrieval": (_bool, True)},
    "entangle": {**_COMMON,
                 "grid.n": (_positive_int, 256),
                 "entangle.ATL": (_floats, REQUIRED),
                 "entangle.max_iter": (_positive_int, 500),
                 "entangle.tol": (_float, 1e-12)},
    "coupling": {**_COMMON,
                 "coupling.lines": (str, None),
                 "coupling.F0": (str, "1"),
                 "coupling.F": (str, "1"),
                 "coupling.detuning_min": (_float, -3000.0),
                 "coupling.detuning_max": (_float, 3000.0),
                 "coupling.samples": (_positive_int, 2401),
                 "coupling.Fz_bar": (_float, 1.0),
                 "coupling.Xi2_bar": (_float, 1.0),
                 "coupling.S0": (_float, 1.0)},
}

LIST_KEYS = ("write.ATL", "read.ATL", "input.xi3", "input.tau_c_over_T")


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated configuration; ``values`` holds every schema key."""

    mode: str
    values: dict
    source: str = "<string>"

    def __getitem__(self, key):
        return self.values[key]

    def canonical(self) -> str:
        """Sorted key=value text; identical configs give identical text."""
        out = []
        for key in sorted(self.values):
            v = self.values[key]
            if isinstance(v, tuple):
                v = ",".join(repr(x) for x in v)
            out.append(f"{key}={v!r}" if not isinstance(v, str) else f"{key}={v}")
        return "\n".join(out) + "\n"

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def with_overrides(self, **values) -> "ScenarioConfig":
        vals = dict(self.values)
        for key, v in values.items():
            if key not in vals:
                raise ConfigError(f"{key!r} is not valid for mode {self.mode!r}")
            vals[key] = v
        return ScenarioConfig(self.mode, vals, self.source)

    def scenarios(self) -> list:
        """Zip the list-valued keys into one dict per scenario."""
        keys = [k for k in LIST_KEYS if k in self.values]
        if not keys:
            return [dict(self.values)]
        lens = {len(self.values[k]) for k in keys} - {1}
        if len(lens) > 1:
            raise ConfigError("list-valued keys must have equal lengths or length 1")
        n = lens.pop() if lens else 1
        out = []
        for i in range(n):
            d = dict(self.values)
            for k in keys:
                seq = self.values[k]
                d[k] = seq[0] if len(seq) == 1 else seq[i]
            out.append(d)
        return out


def parse_config(text: str, source: str = "<string>") -> ScenarioConfig:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, value = (s.strip() for s in body.partition("="))
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        if key in raw:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        raw[key] = (value, lineno)
    if "mode" not in raw:
        raise ConfigError(f"{source}: missing required key 'mode'")
    mode = raw["mode"][0]
    if mode not in SCHEMA:
        raise ConfigError(f"{source}:{raw['mode'][1]}: mode must be one of {', '.join(MODES)}")
    schema = SCHEMA[mode]
    values = {}
    for key, (value, lineno) in raw.items():
        if key not in schema:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r} for mode {mode!r}")
        try:
            values[key] = schema[key][0](value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from None
    for key, (_, default) in schema.items():
        if key in values:
            continue
        if default is REQUIRED:
            raise ConfigError(f"{source}: missing required key {key!r}")
        values[key] = default
    cfg = ScenarioConfig(mode, values, source)
    _validate(cfg)
    return cfg


def _validate(cfg: ScenarioConfig) -> None:
    v = cfg.values
    if cfg.mode in ("memory", "spectra"):
        if any(a >= 0 for a in v["write.ATL"]):
            raise ConfigError("write.ATL must be negative (memory branch)")
        if cfg.mode == "memory" and any(a >= 0 for a in v["read.ATL"]):
            raise ConfigError("read.ATL must be negative (memory branch)")
        if any(x <= 0 for x in v["input.xi3"]):
            raise ConfigError("input.xi3 must be positive (anti-squeezed channel)")
        if any(r <= 0 for r in v["input.tau_c_over_T"]):
            raise ConfigError("input.tau_c_over_T must be positive or inf")
        if v["write.T"] <= 0 or v["sample.L"] <= 0:
            raise ConfigError("write.T and sample.L must be positive")
    if cfg.mode == "entangle" and any(a <= 0 for a in v["entangle.ATL"]):
        raise ConfigError("entangle.ATL must be positive (A > 0)")
    if cfg.mode == "coupling" and not v["coupling.detuning_min"] < v["coupling.detuning_max"]:
        raise ConfigError("coupling.detuning_min must be below coupling.detuning_max")
    cfg.scenarios()


def load_config(path) -> ScenarioConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {p}: {exc.strerror}") from None
    return parse_config(text, str(p))

"""Sectioned ``key = value`` experiment configuration (grammar in docs/config.md)."""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field

from .errors import ConfigError

SCENARIOS = ("schrodinger-free", "fluid-quantum", "ensemble-classical", "hj", "gauge-check",
             "action-check", "verify-identities", "worldfunc", "compare")

# section -> key -> (type, default); None default means required
SCHEMA: dict[str, dict[str, tuple[type, object]]] = {
    "experiment": {"scenario": (str, None), "seed": (int, 0)},
    "grid": {"x_min": (float, -10.0), "x_max": (float, 10.0), "n_points": (int, 512),
             "boundary": (str, "clamped")},
    "model": {"kind": (str, "classical"), "mass": (float, 1.0), "c": (float, 1.0), "hbar": (float, 1.0),
              "lam": (float, 0.5), "potential": (str, "0")},
    "clebsch": {"b0": (float, 1.0)},
    "solver": {"dt": (float, 1e-3), "t_end": (float, 1.0), "save_every": (int, 0), "quantum": (bool, True),
               "include_rest_mass": (bool, False), "bandwidth": (float, 0.0), "n_samples": (int, 10000),
               "n": (int, 2), "trials": (int, 5), "h": (float, 1e-3)},
    "initial": {"shape": (str, "gaussian"), "sigma0": (float, 1.0), "x0": (float, 0.0), "k0": (float, 0.0),
                "p_slope": (float, 0.0), "p0": (float, 0.0)},
    "worldfunc": {"points": (str, ""), "hbar": (float, 1.0546e-27), "b": (float, 1e-17), "c": (float, 3e10),
                  "sigma0": (float, 0.0), "band": (str, "ramp")},
    "compare": {"runs": (str, ""), "l1_tol": (float, 0.0)},
    "output": {"dir": (str, "")},
}

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


def _line_of(text: str, section: str, key: str | None) -> int | None:
    cur = None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"^\[(.+)\]$", line)
        if m:
            cur = m.group(1).strip()
            if key is None and cur == section:
                return n
            continue
        if cur == section and key is not None and re.match(rf"^{re.escape(key)}\s*[=:]", line):
            return n
    return None


def _where(text: str, section: str, key: str | None = None) -> str:
    n = _line_of(text, section, key)
    loc = f"{section}.{key}" if key else f"[{section}]"
    return f"line {n}: {loc}" if n else loc


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    seed: int = 0
    sections: dict[str, dict[str, str]] = field(default_factory=dict)
    source: str = field(default="", compare=False, repr=False)

    def get(self, section: str, key: str):
        typ, default = SCHEMA[section][key]
        raw = self.sections.get(section, {}).get(key)
        if raw is None:
            if default is None:
                raise ConfigError(f"{_where(self.source, section, key)}: required key missing")
            return default
        return _convert(raw, typ, self.source, section, key)

    def to_text(self) -> str:
        lines = []
        for sec in self.sections:
            lines.append(f"[{sec}]")
            for k, v in self.sections[sec].items():
                lines.append(f"{k} = {v}")
            lines.append("")
        return "\n".join(lines)


def _convert(raw: str, typ: type, text: str, section: str, key: str):
    try:
        if typ is bool:
            low = raw.strip().lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(raw)
        return typ(raw.strip())
    except ValueError:
        raise ConfigError(f"{_where(text, section, key)}: cannot read {raw!r} as {typ.__name__}") from None


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"syntax error: {exc}".replace("\n", " ")) from None
    sections: dict[str, dict[str, str]] = {}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"{_where(text, sec)}: unknown section (expected one of {', '.join(SCHEMA)})")
        sections[sec] = {}
        for key, val in cp.items(sec):
            if key not in SCHEMA[sec]:
                raise ConfigError(f"{_where(text, sec, key)}: unknown key")
            sections[sec][key] = val
            _convert(val, SCHEMA[sec][key][0], text, sec, key)
    if "experiment" not in sections or "scenario" not in sections["experiment"]:
        raise ConfigError("experiment.scenario: required key missing")
    scenario = sections["experiment"]["scenario"].strip()
    if scenario not in SCENARIOS:
        raise ConfigError(f"{_where(text, 'experiment', 'scenario')}: unknown scenario {scenario!r} "
                          f"(expected one of {', '.join(SCENARIOS)})")
    seed = _convert(sections["experiment"].get("seed", "0"), int, text, "experiment", "seed")
    if seed < 0:
        raise ConfigError(f"{_where(text, 'experiment', 'seed')}: seed must be non-negative")
    cfg = ExperimentConfig(scenario, seed, sections, text)
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    def check(cond, section, key, msg):
        if not cond:
            raise ConfigError(f"{_where(cfg.source, section, key)}: {msg}")

    check(cfg.get("grid", "x_max") > cfg.get("grid", "x_min"), "grid", "x_max", "x_max must exceed x_min")
    check(cfg.get("grid", "n_points") >= 8, "grid", "n_points", "need at least 8 points")
    check(cfg.get("grid", "boundary") in ("clamped", "periodic"), "grid", "boundary",
          "boundary must be clamped or periodic")
    check(cfg.get("model", "kind") in ("classical", "relativistic"), "model", "kind",
          "kind must be classical or relativistic")
    for key in ("mass", "c", "hbar"):
        check(cfg.get("model", key) > 0, "model", key, "must be positive")
    check(cfg.get("clebsch", "b0") != 0, "clebsch", "b0", "b0 must be nonzero")
    for key in ("dt", "t_end"):
        check(cfg.get("solver", key) > 0, "solver", key, "must be positive")
    check(cfg.get("solver", "n") in (2, 3), "solver", "n", "n must be 2 or 3")
    check(cfg.get("initial", "sigma0") > 0, "initial", "sigma0", "must be positive")
    check(cfg.get("initial", "shape") in ("gaussian", "quadratic", "plane", "uniform"), "initial", "shape",
          "shape must be gaussian, quadratic, plane or uniform")
    check(cfg.get("worldfunc", "band") in ("ramp", "step"), "worldfunc", "band", "band must be ramp or step")
    try:
        [float(v) for v in cfg.get("model", "potential").split(",")]
    except ValueError:
        raise ConfigError(f"{_where(cfg.source, 'model', 'potential')}: expected comma-separated numbers") from None
    if cfg.scenario == "compare":
        check(len([r for r in cfg.get("compare", "runs").split(",") if r.strip()]) >= 2, "compare", "runs",
              "compare needs at least two runs")


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)

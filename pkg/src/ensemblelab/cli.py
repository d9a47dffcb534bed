"""Command-line entry point.

    ensemblelab run <config>
    ensemblelab compare <manifest> <manifest> [...]
    ensemblelab verify-identities [--n 2|3] [--trials K] [--h H] [--seed S]
    ensemblelab worldfunc --points <file>

Exit codes: 0 all checks pass, 1 a check failed, 2 bad input or solver abort.
Run outputs go to $ENSEMBLELAB_OUTPUT_ROOT (default ./runs)/<scenario>-<timestamp>/.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, scenarios
from .config import ExperimentConfig, load_config, parse_config
from .errors import EnsembleLabError

log = logging.getLogger("ensemblelab")

OUTPUT_ROOT_ENV = "ENSEMBLELAB_OUTPUT_ROOT"

EXIT_OK, EXIT_CHECK_FAILED, EXIT_ERROR = 0, 1, 2

PLOT_SCRIPT = '''"""Plot rho(t, x) snapshots from rho.csv (needs matplotlib)."""
import csv
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).parent
series = defaultdict(lambda: ([], []))
with open(here / "rho.csv") as fh:
    for row in csv.DictReader(fh):
        xs, rs = series[float(row["t"])]
        xs.append(float(row["x"]))
        rs.append(float(row["rho"]))
for t, (xs, rs) in sorted(series.items()):
    plt.plot(xs, rs, label=f"t={t:g}")
plt.xlabel("x")
plt.ylabel("rho")
plt.legend()
out = sys.argv[1] if len(sys.argv) > 1 else str(here / "rho.png")
plt.savefig(out, dpi=120)
print(out)
'''


def output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "runs"))


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _run_dir(cfg: ExperimentConfig) -> Path:
    explicit = cfg.get("output", "dir")
    if explicit:
        return Path(explicit)
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S%fZ")
    return output_root() / f"{cfg.scenario}-{stamp}"


def write_run(cfg: ExperimentConfig, res: scenarios.ScenarioResult, wall: float, out_dir: Path | None = None) -> Path:
    out_dir = out_dir or _run_dir(cfg)
    for name, text in res.outputs.items():
        write_atomic(out_dir / name, text)
    if "rho.csv" in res.outputs:
        write_atomic(out_dir / "plot.py", PLOT_SCRIPT)
    passed = all(c.passed for c in res.checks.values())
    manifest = {
        "scenario": cfg.scenario,
        "seed": cfg.seed,
        "version": __version__,
        "config": cfg.to_text(),
        "tolerances": {k: c.tolerance for k, c in res.checks.items()},
        "checks": {k: c.as_dict() for k, c in res.checks.items()},
        "outputs": sorted(res.outputs),
        "info": res.info,
        "wall_clock_s": wall,
        "passed": passed,
    }
    write_atomic(out_dir / "manifest.json", json.dumps(manifest, indent=2, default=float) + "\n")
    return out_dir


def _report(res: scenarios.ScenarioResult, out_dir: Path) -> int:
    for name, c in res.checks.items():
        flag = "PASS" if c.passed else "FAIL"
        print(f"{flag} {name}: {c.value:.3e} {c.relation} {c.tolerance:g}")
    print(f"outputs: {out_dir}")
    return EXIT_OK if all(c.passed for c in res.checks.values()) else EXIT_CHECK_FAILED


def execute(cfg: ExperimentConfig, base: Path) -> tuple[scenarios.ScenarioResult, Path]:
    t0 = time.perf_counter()
    if cfg.scenario == "compare":
        runs = [base / r.strip() for r in cfg.get("compare", "runs").split(",") if r.strip()]
        res = compare_runs(runs, cfg.get("compare", "l1_tol"))
    else:
        res = scenarios.SCENARIO_FUNCS[cfg.scenario](cfg, base)
    out = write_run(cfg, res, time.perf_counter() - t0)
    return res, out


def _series_from(path: Path) -> scenarios.DensitySeries:
    """A density series from a manifest.json, a run directory, a rho.csv or a config file."""
    if path.is_dir():
        path = path / "manifest.json"
    if path.suffix == ".json":
        manifest = json.loads(path.read_text())
        rho = path.parent / "rho.csv"
        if not rho.exists():
            raise EnsembleLabError(f"{path}: run has no rho.csv to compare")
        return scenarios.DensitySeries.from_csv(f"{manifest['scenario']}:{path.parent.name}", rho.read_text())
    if path.suffix == ".csv":
        return scenarios.DensitySeries.from_csv(path.stem, path.read_text())
    cfg = load_config(path)
    res = scenarios.SCENARIO_FUNCS[cfg.scenario](cfg, path.parent)
    if "rho.csv" not in res.outputs:
        raise EnsembleLabError(f"{path}: scenario {cfg.scenario} produces no density")
    return scenarios.DensitySeries.from_csv(path.stem, res.outputs["rho.csv"])


def compare_runs(paths: list[Path], l1_tol: float = 0.0) -> scenarios.ScenarioResult:
    try:
        series = [_series_from(p) for p in paths]
        rows = scenarios.compare(series)
    except (OSError, ValueError, KeyError) as exc:
        raise EnsembleLabError(str(exc)) from None
    res = scenarios.ScenarioResult()
    res.outputs["comparison.csv"] = scenarios.csv_text(scenarios.COMPARE_HEADER, rows)
    if l1_tol > 0:
        res.checks["max_L1"] = scenarios.below(max(r[3] for r in rows), l1_tol)
    res.info["runs"] = [s.name for s in series]
    res.info["worst"] = [max(r[k] for r in rows) for k in (3, 4, 5)]
    return res


def _synthetic_config(scenario: str, seed: int = 0, **sections) -> ExperimentConfig:
    lines = ["[experiment]", f"scenario = {scenario}", f"seed = {seed}"]
    for sec, kv in sections.items():
        lines.append(f"[{sec}]")
        lines += [f"{k} = {v}" for k, v in kv.items()]
    return parse_config("\n".join(lines) + "\n")


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    res, out = execute(cfg, Path(args.config).resolve().parent)
    return _report(res, out)


def cmd_compare(args) -> int:
    t0 = time.perf_counter()
    res = compare_runs([Path(p) for p in args.manifests], args.l1_tol)
    cfg = _synthetic_config("compare", compare={"runs": ",".join(args.manifests), "l1_tol": args.l1_tol})
    out = write_run(cfg, res, time.perf_counter() - t0)
    worst = res.info["worst"]
    print(f"max L1 {worst[0]:.3e}  max L2 {worst[1]:.3e}  max |d| {worst[2]:.3e}")
    return _report(res, out)


def cmd_verify(args) -> int:
    cfg = _synthetic_config("verify-identities", args.seed, solver={"n": args.n, "trials": args.trials, "h": args.h})
    res, out = execute(cfg, Path.cwd())
    return _report(res, out)


def cmd_worldfunc(args) -> int:
    points = Path(args.points).resolve()
    kv = {"points": points.name, "band": args.band}
    if args.sigma0:
        kv["sigma0"] = args.sigma0
    cfg = _synthetic_config("worldfunc", worldfunc=kv)
    t0 = time.perf_counter()
    res = scenarios.run_worldfunc(cfg, points.parent)
    out = write_run(cfg, res, time.perf_counter() - t0)
    sys.stdout.write(res.outputs["sigma.csv"])
    return _report(res, out)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ensemblelab", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the experiment described by a config file")
    p.add_argument("config")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="compare density outputs of two or more runs")
    p.add_argument("manifests", nargs="+", help="manifest.json files, run directories, rho.csv files or configs")
    p.add_argument("--l1-tol", type=float, default=0.0)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("verify-identities", help="check the Jacobian identities on random smooth maps")
    p.add_argument("--n", type=int, default=2, choices=(2, 3))
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--h", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("worldfunc", help="evaluate the distorted world function for pairs of events")
    p.add_argument("--points", required=True, help="file with lines 't1 x1 y1 z1 t2 x2 y2 z2'")
    p.add_argument("--band", choices=("ramp", "step"), default="ramp")
    p.add_argument("--sigma0", type=float, default=0.0)
    p.set_defaults(func=cmd_worldfunc)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except EnsembleLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

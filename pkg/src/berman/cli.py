"""Command-line front end: ``berman estimate | exact | study | selftest``.

Exit codes: 0 success, 1 selftest failure, 2 configuration error,
3 compute budget refused.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import os
import platform
import sys
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import __version__
from . import reference_values as ref
from .analytic import expected_sojourn, fbm_expected_sojourn_closed, markov_upper_bound
from .estimators import DIRECT, SPECTRAL
from .experiments import (
    run_band_and_monotonicity,
    run_delta_study,
    run_rate_study,
    run_table_reproduction,
)
from .simulation import BermanEstimator, BudgetExceeded
from .variance_models import from_spec

EXIT_OK, EXIT_SELFTEST, EXIT_CONFIG, EXIT_BUDGET = 0, 1, 2, 3


class ConfigError(ValueError):
    """Invalid or incomplete run configuration (exit code 2)."""


@dataclass
class RunConfig:
    model: str = "fbm"
    hurst: float | None = None
    half_width: float = 16.0
    step: float = 2.0**-7
    n_paths: int = 4000
    x_grid: tuple = (0.0,)
    deltas: tuple = (0.0,)
    estimator: str = "both"
    seed: int = 0
    output: str = "."
    budget: float | None = None
    # not part of the digest: results do not depend on it
    threads: int | None = field(default=None, metadata={"hashed": False})

    SECTIONS = {
        "model": ("model", "hurst"),
        "grid": ("half_width", "step", "deltas"),
        "run": ("n_paths", "x_grid", "estimator", "seed", "budget"),
        "output": ("output",),
    }

    def canonical_text(self) -> str:
        """Sectioned ``key = value`` lines in fixed order; the digest input."""
        lines = []
        for section, keys in self.SECTIONS.items():
            lines.append(f"[{section}]")
            for k in keys:
                if k == "output":
                    continue
                lines.append(f"{k} = {_canon(getattr(self, k))}")
        return "\n".join(lines) + "\n"

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()[:16]

    def estimators(self) -> tuple:
        return {"both": (DIRECT, SPECTRAL), DIRECT: (DIRECT,), SPECTRAL: (SPECTRAL,)}[self.estimator]

    def validate(self) -> "RunConfig":
        if self.estimator not in ("both", DIRECT, SPECTRAL):
            raise ConfigError(f"unknown estimator {self.estimator!r}")
        if self.n_paths < 2:
            raise ConfigError("n must be at least 2")
        if not self.x_grid:
            raise ConfigError("x grid is empty")
        if not self.deltas:
            raise ConfigError("delta list is empty")
        if any(x < 0 for x in self.x_grid):
            raise ConfigError("x values must be non-negative")
        try:
            from_spec(self.model, hurst=self.hurst)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self


def _canon(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (tuple, list)):
        return ",".join(_canon(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _floats(text: str) -> tuple:
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(float(t) for t in text.split(","))
    except ValueError:
        raise ConfigError(f"not a comma-separated list of numbers: {text!r}") from None


_CONVERT = {
    "hurst": float,
    "half_width": float,
    "step": float,
    "n_paths": int,
    "seed": int,
    "budget": float,
    "threads": int,
    "x_grid": _floats,
    "deltas": _floats,
}
_ALIASES = {"kind": "model", "n": "n_paths", "x": "x_grid", "delta": "deltas", "dir": "output", "half-width": "half_width"}


def load_config(path) -> dict:
    """Read a sectioned key-value config file into RunConfig field values."""
    parser = configparser.ConfigParser()
    if not parser.read(path, encoding="utf-8"):
        raise ConfigError(f"cannot read config file {path}")
    known = {f.name for f in fields(RunConfig)}
    out = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            name = _ALIASES.get(key, key.replace("-", "_"))
            if name not in known:
                raise ConfigError(f"unknown config key {section}.{key}")
            out[name] = _convert(name, raw)
    return out


def _convert(name, raw):
    if raw is None or (isinstance(raw, str) and raw.strip() == ""):
        return () if name in ("x_grid", "deltas") else None
    conv = _CONVERT.get(name)
    if conv is None:
        return raw
    try:
        return conv(raw)
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None


def build_config(args) -> RunConfig:
    values = load_config(args.config) if getattr(args, "config", None) else {}
    for name in ("model", "hurst", "half_width", "step", "n_paths", "x_grid", "deltas", "estimator", "seed", "output", "budget", "threads"):
        v = getattr(args, name, None)
        if v is not None:
            values[name] = _convert(name, v) if isinstance(v, str) else v
    if values.get("budget") is None and os.environ.get("BERMAN_BUDGET_SECONDS"):
        values["budget"] = float(os.environ["BERMAN_BUDGET_SECONDS"])
    return RunConfig(**values).validate()


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _manifest(path, cfg: RunConfig | None, extra: dict):
    payload = {
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "argv": sys.argv[1:],
        **extra,
    }
    if cfg is not None:
        payload.update(config=asdict(cfg), config_text=cfg.canonical_text(), config_hash=cfg.config_hash, seed=cfg.seed)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def cmd_estimate(args) -> int:
    cfg = build_config(args)
    os.makedirs(cfg.output, exist_ok=True)
    t0 = time.perf_counter()
    est = BermanEstimator(
        model=cfg.model,
        hurst=cfg.hurst,
        half_width=cfg.half_width,
        step=cfg.step,
        deltas=cfg.deltas,
        n_paths=cfg.n_paths,
        seed=cfg.seed,
        max_x=max(cfg.x_grid),
        n_jobs=cfg.threads,
        budget_seconds=cfg.budget,
    )
    try:
        est.fit()
        rows = []
        for kind in cfg.estimators():
            for d in cfg.deltas:
                for e in est.estimate(cfg.x_grid, d, kind, config_hash=cfg.config_hash):
                    rows.append((e.x, e.delta, e.estimator, e.value, e.half_width95, e.n, est.flagged_fraction_))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    _write_csv(
        os.path.join(cfg.output, "estimates.csv"),
        ["x", "delta", "estimator", "value", "halfWidth95", "N", "flaggedFraction"],
        rows,
    )
    if args.dump_paths:
        from .paths import GridSpec, sample_paths

        sample_paths(est.model_, GridSpec(cfg.half_width, cfg.step), cfg.n_paths, cfg.seed).dump(args.dump_paths)
    _manifest(
        os.path.join(cfg.output, "manifest.json"),
        cfg,
        {"wall_time": time.perf_counter() - t0, "flagged_fraction": est.flagged_fraction_},
    )
    print(f"wrote {len(rows)} estimates to {os.path.join(cfg.output, 'estimates.csv')}")
    return EXIT_OK


def cmd_exact(args) -> int:
    os.makedirs(args.output, exist_ok=True)
    markov = []
    if args.table is not None:
        report = run_table_reproduction(args.table)
        kind = "fbm" if args.table == 1 else "integrated-ou"
        header = ["model", "hurst", "delta", "quantity", "value", "reference", "abs_error", "status"]
        rows = [
            (kind, r.params.get("hurst", ""), r.params["delta"], r.params.get("quantity", "mean"),
             r.computed, r.reference, abs(r.computed - r.reference), r.status)
            for r in report.rows
        ]
        n_fail = sum(r.status == "fail" for r in report.rows)
        print(f"table {args.table}: {len(rows) - n_fail}/{len(rows)} cells within 1e-4")
    else:
        deltas = _floats(args.deltas)
        if not deltas:
            raise ConfigError("delta list is empty")
        hursts = _floats(args.hurst) if args.hurst else (None,)
        xs = _floats(args.markov_x) if args.markov_x else ()
        header = ["model", "hurst", "delta", "expected_sojourn", "inverse", "closed_form"]
        rows = []
        for h in hursts:
            try:
                model = from_spec(args.model, hurst=h)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
            for d in deltas:
                val = expected_sojourn(model, d, args.window)
                closed = fbm_expected_sojourn_closed(h) if model.kind == "fbm" and d == 0 else ""
                label = "" if h is None else h
                rows.append((model.kind, label, d, val, 1.0 / val, closed))
                markov.extend((model.kind, label, d, x, 1.0, markov_upper_bound(val, 1.0, x)) for x in xs)
    _write_csv(os.path.join(args.output, "exact.csv"), header, rows)
    if markov:
        _write_csv(os.path.join(args.output, "markov.csv"), ["model", "hurst", "delta", "x", "p", "upper_bound"], markov)
    _manifest(os.path.join(args.output, "manifest.json"), None, {"command": "exact"})
    return EXIT_OK


def cmd_study(args) -> int:
    os.makedirs(args.output, exist_ok=True)
    common = {"seed": args.seed, "n_jobs": args.threads}
    if args.budget is not None:
        common["budget_seconds"] = args.budget
    elif os.environ.get("BERMAN_BUDGET_SECONDS"):
        common["budget_seconds"] = float(os.environ["BERMAN_BUDGET_SECONDS"])
    try:
        if args.kind == "rate":
            kw = {"mode": args.mode or "analytic"}
            if args.lambdas:
                kw["lambdas"] = _floats(args.lambdas)
            if args.x_grid:
                kw["x_grid"] = _floats(args.x_grid)
            if args.t_grid:
                kw["t_grid"] = _floats(args.t_grid)
            if kw["mode"] == "monte-carlo":
                kw.update(common, n_paths=args.n_paths or 4000)
            report = run_rate_study(**kw)
        elif args.kind == "table":
            if args.table is None:
                raise ConfigError("study table needs --table")
            report = run_table_reproduction(args.table, scale=args.scale, n_paths=args.n_paths, **common)
        elif args.kind == "delta":
            model = from_spec(args.model, hurst=args.hurst_value)
            kw = dict(common, scale=args.scale, n_paths=args.n_paths)
            if args.deltas:
                kw["deltas"] = _floats(args.deltas)
            if args.x_grid:
                kw["x_grid"] = _floats(args.x_grid)
            report = run_delta_study(model, **kw)
        else:
            mode = args.mode or "monte-carlo"
            kw = dict(common, scale=args.scale, n_paths=args.n_paths, mode=mode)
            if args.x_grid:
                kw["x_grid"] = _floats(args.x_grid)
            model = None if mode == "analytic" else from_spec(args.model, hurst=args.hurst_value)
            report = run_band_and_monotonicity(model, **kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    report.to_csv(os.path.join(args.output, f"study_{args.kind}.csv"))
    report.to_json(os.path.join(args.output, f"study_{args.kind}.json"))
    _manifest(os.path.join(args.output, "manifest.json"), None, {"command": f"study {args.kind}", "runtime": report.runtime})
    n_fail = sum(r.status == "fail" for r in report.rows)
    print(f"study {args.kind}: {len(report.rows) - n_fail}/{len(report.rows)} rows ok ({report.runtime:.2f}s)")
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .analytic import berman_closed_h1

    checks = []
    for h in (0.3, 0.5, 1.0):
        val = expected_sojourn(from_spec("fbm", hurst=h), 0.0)
        checks.append((f"E eps_0 quadrature, H={h}", abs(val - ref.TABLE1[(h, 0.0)]) <= 1e-4))
    rate = run_rate_study(lambdas=(0.5, 1.0), x_grid=(0.0,))
    checks.append(("rate study, H=1 closed form", rate.passed))
    est = BermanEstimator(hurst=1.0, half_width=8.0, step=2.0**-5, n_paths=1000, seed=1, max_x=1.0, n_jobs=args.threads).fit()
    for e in est.estimate([0.0, 1.0]):
        target = berman_closed_h1(e.x)
        checks.append((f"direct estimator vs closed form, H=1, x={e.x}", abs(e.value - target) <= 3 * e.half_width95))
    for name, ok in checks:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}")
    return EXIT_OK if all(ok for _, ok in checks) else EXIT_SELFTEST


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="berman", description="Berman functions and Pickands constants by Monte Carlo")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("estimate", help="estimate B^delta(x) with both estimators")
    e.add_argument("--config", help="sectioned key-value config file; flags override it")
    e.add_argument("--model", help="fbm | integrated-ou")
    e.add_argument("--hurst", type=float)
    e.add_argument("--half-width", dest="half_width", type=float)
    e.add_argument("--step", type=float)
    e.add_argument("--n", dest="n_paths", type=int)
    e.add_argument("--x", dest="x_grid", help="comma-separated thresholds")
    e.add_argument("--delta", dest="deltas", help="comma-separated meshes (0 = continuous)")
    e.add_argument("--estimator", choices=("direct", "spectral", "both"))
    e.add_argument("--seed", type=int)
    e.add_argument("--out", dest="output")
    e.add_argument("--budget", type=float, help="refuse runs estimated to take longer (seconds)")
    e.add_argument("--threads", type=int)
    e.add_argument("--dump-paths", help="also write the sampled paths to this binary file")
    e.set_defaults(func=cmd_estimate)

    x = sub.add_parser("exact", help="expected sojourn, closed forms and Markov bounds")
    x.add_argument("--table", type=int, choices=(1, 5), help="regenerate a reference table")
    x.add_argument("--model", default="fbm")
    x.add_argument("--hurst", help="comma-separated Hurst values")
    x.add_argument("--delta", dest="deltas", default="0,1,5,10")
    x.add_argument("--window", type=float, help="restrict the sojourn to [-window, window]")
    x.add_argument("--markov-x", help="x values for the p=1 Markov upper bound")
    x.add_argument("--out", dest="output", default=".")
    x.set_defaults(func=cmd_exact)

    s = sub.add_parser("study", help="rate | delta | table | band")
    s.add_argument("kind", choices=("rate", "delta", "table", "band"))
    s.add_argument("--lambda", dest="lambdas")
    s.add_argument("--x", dest="x_grid")
    s.add_argument("--T", dest="t_grid")
    s.add_argument("--delta", dest="deltas")
    s.add_argument("--table", type=int, choices=(1, 2, 3, 4, 5))
    s.add_argument("--model", default="integrated-ou")
    s.add_argument("--hurst", dest="hurst_value", type=float)
    s.add_argument("--mode", choices=("analytic", "monte-carlo"))
    s.add_argument("--scale", choices=("desk", "full"), default="desk")
    s.add_argument("--n", dest="n_paths", type=int)
    s.add_argument("--seed", type=int, default=2024)
    s.add_argument("--budget", type=float)
    s.add_argument("--threads", type=int)
    s.add_argument("--out", dest="output", default=".")
    s.set_defaults(func=cmd_study)

    t = sub.add_parser("selftest", help="quick end-to-end sanity checks")
    t.add_argument("--threads", type=int)
    t.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceeded as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())

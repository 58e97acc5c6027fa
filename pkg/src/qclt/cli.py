"""Command-line front end: flat key=value configs in, CSV tables out.

Usage::

    qclt <subcommand> --config run.cfg [--seed N] [--out table.csv] [--workers K]

A config file holds one ``section.key = value`` pair per line; ``#`` starts a
comment.  Lists are comma separated.  Matrices (``tv.cov``) separate rows with
``;``.  Exit status is 0 on success, 2 for config errors, 3 for numerical
domain errors and 4 for I/O errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .dep_models import MODEL_KINDS, ModelConfig, build_model, model_grid
from .dist_core import FAMILIES
from .errors import ConfigError, DomainError, QcltError
from .gauss_metrics import (as_cov, hellinger_tv_bound, tv_mvn_bound, tv_normal_bounds,
                            tv_normal_exact)
from .mc_engine import (ExperimentPlan, fit_rate, limit_constant, run_joint_experiment,
                        run_median_experiment, scaled_ks_exact)
from .sigma_bounds import multi_bound_rhs, sigma_empirical, sigma_exact, univ_bound_rhs

SUBCOMMANDS = ("simulate", "bound", "sigma", "gauss-tv", "oracle", "rate")

EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_IO = 0, 2, 3, 4

HEADERS = {
    "simulate": ("n", "reps", "seed", "alpha", "ks_emp", "sigma_used", "theta_used",
                 "bound_term1", "bound_term2", "bound_total"),
    "simulate-joint": ("n", "x", "emp_prob", "gauss_prob", "gap"),
    "oracle": ("n", "sqrt_n_ks", "limit_const"),
    "rate": ("slope", "intercept", "max_residual"),
    "bound": ("n", "ell", "term1", "term2", "total"),
    "sigma": ("n", "i", "j", "exact", "empirical", "stderr"),
    "gauss-tv-rho": ("rho", "tv_exact", "tv_tight", "tv_simple"),
    "gauss-tv-cov": ("dim", "eigen_bound", "frobenius_bound", "hellinger_bound"),
}

UINT64_MAX = (1 << 64) - 1


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------


def _float(key, text, line):
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"malformed number {text!r}", key, (line,)) from None
    if math.isnan(value):
        raise ConfigError("NaN is not allowed", key, (line,))
    return value


def _int(key, text, line):
    try:
        return int(text, 10)
    except ValueError:
        raise ConfigError(f"malformed integer {text!r}", key, (line,)) from None


def _list(conv):
    def parse(key, text, line):
        items = [t.strip() for t in text.split(",")]
        if any(not t for t in items):
            raise ConfigError(f"empty item in list {text!r}", key, (line,))
        return tuple(conv(key, t, line) for t in items)
    return parse


def _enum(choices):
    def parse(key, text, line):
        if text not in choices:
            raise ConfigError(f"unknown value {text!r}; expected one of {', '.join(choices)}",
                              key, (line,))
        return text
    return parse


def _matrix(key, text, line):
    rows = [_list(_float)(key, r, line) for r in text.split(";")]
    if any(len(r) != len(rows) for r in rows):
        raise ConfigError("matrix must be square", key, (line,))
    return tuple(rows)


def _text(key, text, line):
    if not text:
        raise ConfigError("empty value", key, (line,))
    return text


SCHEMA: dict[str, Callable] = {
    "model.kind": _enum(MODEL_KINDS),
    "model.innovation": _enum(FAMILIES),
    "model.innovation_params": _list(_float),
    "model.mu": _float,
    "model.c": _list(_float),
    "model.width": _int,
    "grid.levels": _list(_float),
    "experiment.n": _list(_int),
    "experiment.reps": _int,
    "experiment.seed": _int,
    "experiment.xgrid": _list(_float),
    "experiment.x": _list(_float),
    "experiment.precision": _float,
    "tv.rho": _list(_float),
    "tv.cov": _matrix,
    "rate.input": _text,
}

REQUIRED = {
    "simulate": ("model.kind", "grid.levels", "experiment.n", "experiment.reps", "experiment.seed"),
    "bound": ("model.kind", "grid.levels", "experiment.n"),
    "sigma": ("model.kind", "grid.levels", "experiment.n"),
    "gauss-tv": (),
    "oracle": ("model.kind", "experiment.n"),
    "rate": ("rate.input",),
}


@dataclass
class RunConfig:
    subcommand: str
    values: dict = field(default_factory=dict)
    lines: dict = field(default_factory=dict)
    base_dir: Path = Path(".")

    def get(self, key, default=None):
        return self.values.get(key, default)

    def require(self, key):
        if key not in self.values:
            raise ConfigError(f"required for '{self.subcommand}' but missing", key)
        return self.values[key]

    @property
    def seed(self) -> int:
        return self.values.get("experiment.seed", 0)

    @property
    def levels(self) -> tuple[float, ...]:
        return self.values.get("grid.levels", (0.5,))

    @property
    def n_list(self) -> tuple[int, ...]:
        return self.require("experiment.n")

    def model_config(self) -> ModelConfig:
        kind = self.require("model.kind")
        try:
            return ModelConfig(
                kind=kind,
                innovation=self.get("model.innovation", "standard-normal"),
                innovation_params=self.get("model.innovation_params", ()),
                mu=self.get("model.mu", 0.0),
                coefficients=self.get("model.c", ()) if kind == "ma_q" else (),
                width=self.get("model.width", 0) if kind == "window_fn" else 0,
                n=max(self.get("experiment.n", (1000,))),
            )
        except DomainError as exc:
            raise ConfigError(str(exc), "model.kind", self._line("model.kind")) from None

    def _line(self, key):
        return (self.lines[key],) if key in self.lines else ()


def parse_config(text: str, subcommand: str = "simulate") -> RunConfig:
    """Parse and validate a flat ``section.key = value`` document."""
    if subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    values: dict = {}
    lines: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected key=value, got {line!r}", None, (lineno,))
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError("unknown key", key, (lineno,))
        if key in lines:
            raise ConfigError("duplicate key", key, (lines[key], lineno))
        values[key] = SCHEMA[key](key, value, lineno)
        lines[key] = lineno
    cfg = RunConfig(subcommand, values, lines)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    for key in REQUIRED[cfg.subcommand]:
        cfg.require(key)
    v = cfg.values

    def fail(key, msg):
        raise ConfigError(msg, key, cfg._line(key))

    if "experiment.seed" in v and not 0 <= v["experiment.seed"] <= UINT64_MAX:
        fail("experiment.seed", "seed must be a 64-bit unsigned integer")
    if "experiment.reps" in v and v["experiment.reps"] < 1:
        fail("experiment.reps", "must be positive")
    if "experiment.n" in v:
        ns = v["experiment.n"]
        if any(n < 3 for n in ns):
            fail("experiment.n", "sample sizes must be >= 3")
        if any(b <= a for a, b in zip(ns, ns[1:])):
            fail("experiment.n", "sample sizes must be strictly increasing")
    if "grid.levels" in v:
        lv = v["grid.levels"]
        if any(not 0.0 < a < 1.0 for a in lv) or any(b <= a for a, b in zip(lv, lv[1:])):
            fail("grid.levels", "levels must be strictly increasing inside (0, 1)")
    if "experiment.precision" in v and not v["experiment.precision"] > 0.0:
        fail("experiment.precision", "must be positive")
    if v.get("model.kind") == "ma_q" and not v.get("model.c"):
        fail("model.kind", "ma_q needs model.c")
    if "model.width" in v and v["model.width"] < 0:
        fail("model.width", "must be >= 0")
    if cfg.subcommand == "gauss-tv" and ("tv.rho" in v) == ("tv.cov" in v):
        raise ConfigError("gauss-tv needs exactly one of tv.rho and tv.cov")
    if cfg.subcommand == "oracle" and v["model.kind"] != "iid":
        fail("model.kind", "the exact oracle needs an iid model")


def load_config(path: str | Path, subcommand: str) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    cfg = parse_config(text, subcommand)
    cfg.base_dir = path.parent
    return cfg


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def render_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row has {len(row)} fields, header has {len(header)}")
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_csv(header: Sequence[str], rows: Iterable[Sequence], path: str | Path | None) -> None:
    text = render_csv(header, rows)
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def read_csv(path: str | Path) -> tuple[list[str], list[dict]]:
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            rows = list(reader)
            return list(reader.fieldnames or []), rows
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _plan(cfg: RunConfig) -> ExperimentPlan:
    return ExperimentPlan(
        model=cfg.model_config(),
        levels=cfg.levels,
        n_list=cfg.n_list,
        reps=cfg.require("experiment.reps"),
        seed=cfg.seed,
        xgrid=cfg.get("experiment.xgrid", (-1.0, 0.0, 1.0)),
        precision=cfg.get("experiment.precision", 1e-3),
    )


def cmd_simulate(cfg: RunConfig, workers: int):
    plan = _plan(cfg)
    if len(plan.levels) == 1:
        model = build_model(plan.model, plan.levels)
        rows = []
        for run in run_median_experiment(plan, workers):
            r = run.result
            b = univ_bound_rhs(model, r.n, sigma=run.sigma)
            rows.append((r.n, r.reps, r.seed, plan.levels[0], r.ks, run.sigma, run.theta,
                         b.term1, b.term2, b.total))
        return HEADERS["simulate"], rows
    rows = []
    for run in run_joint_experiment(plan, workers):
        for row in run.rows:
            rows.append((run.n, ";".join(fmt(v) for v in row.x), row.emp, row.gauss, row.gap))
    return HEADERS["simulate-joint"], rows


def cmd_bound(cfg: RunConfig, workers: int):
    model = build_model(cfg.model_config(), cfg.levels)
    grid = model_grid(model, cfg.levels)
    kw = dict(reps=cfg.get("experiment.reps", 20_000), seed=cfg.seed, workers=workers)
    rows = []
    for n in cfg.n_list:
        if grid.ell == 1 and grid.levels == (0.5,):
            rep = univ_bound_rhs(model, n, **kw)
        else:
            rep = multi_bound_rhs(model, grid, n, **kw)
        rows.append((n, grid.ell, rep.term1, rep.term2, rep.total))
    return HEADERS["bound"], rows


def cmd_sigma(cfg: RunConfig, workers: int):
    model = build_model(cfg.model_config(), cfg.levels)
    grid = model_grid(model, cfg.levels)
    x = cfg.get("experiment.x", (0.0,))
    if len(x) not in (1, grid.ell):
        raise ConfigError(f"needs 1 or {grid.ell} values", "experiment.x",
                          cfg._line("experiment.x"))
    reps = cfg.get("experiment.reps")
    rows = []
    for n in cfg.n_list:
        exact = sigma_exact(model, grid, x, n).data if (model.q == 0 or model.is_gaussian) else None
        emp = sigma_empirical(model, grid, x, n, reps, cfg.seed, workers) if reps else None
        if exact is None and emp is None:
            raise ConfigError("no exact covariance for this model; set experiment.reps",
                              "experiment.reps")
        for i in range(grid.ell):
            for j in range(grid.ell):
                rows.append((n, i, j,
                             None if exact is None else exact[i, j],
                             None if emp is None else emp.cov.data[i, j],
                             None if emp is None else emp.stderr[i, j]))
    return HEADERS["sigma"], rows


def cmd_gauss_tv(cfg: RunConfig, workers: int):
    if "tv.rho" in cfg.values:
        rows = []
        for rho in cfg.values["tv.rho"]:
            b = tv_normal_bounds(rho)
            rows.append((rho, tv_normal_exact(rho), b.tight, b.simple))
        return HEADERS["gauss-tv-rho"], rows
    cov = as_cov(np.array(cfg.values["tv.cov"]))
    bound = tv_mvn_bound(cov)
    return HEADERS["gauss-tv-cov"], [(cov.dim, bound.bound, bound.frobenius,
                                      hellinger_tv_bound(cov))]


def cmd_oracle(cfg: RunConfig, workers: int):
    model = build_model(cfg.model_config(), (0.5,))
    const = limit_constant(model.marginal)
    return HEADERS["oracle"], [(n, scaled_ks_exact(model.marginal, n), const)
                               for n in cfg.n_list]


def cmd_rate(cfg: RunConfig, workers: int):
    src = Path(cfg.values["rate.input"])
    if not src.is_absolute():
        src = cfg.base_dir / src
    header, rows = read_csv(src)
    try:
        if "ks_emp" in header:
            points = [(float(r["n"]), float(r["ks_emp"])) for r in rows]
        elif "sqrt_n_ks" in header:
            points = [(float(r["n"]), float(r["sqrt_n_ks"]) / math.sqrt(float(r["n"])))
                      for r in rows]
        else:
            raise ConfigError("input CSV has neither a ks_emp nor a sqrt_n_ks column",
                              "rate.input", cfg._line("rate.input"))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"malformed input CSV: {exc}", "rate.input",
                          cfg._line("rate.input")) from None
    fit = fit_rate(points)
    return HEADERS["rate"], [(fit.slope, fit.intercept, fit.max_residual)]


COMMANDS = {
    "simulate": cmd_simulate,
    "bound": cmd_bound,
    "sigma": cmd_sigma,
    "gauss-tv": cmd_gauss_tv,
    "oracle": cmd_oracle,
    "rate": cmd_rate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qclt", description=__doc__.split("\n\n")[0])
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="key=value configuration file")
    parser.add_argument("--seed", type=int, help="override experiment.seed")
    parser.add_argument("--out", help="output CSV path (default: stdout)")
    parser.add_argument("--workers", type=int, default=1,
                        help="worker processes for Monte Carlo runs (output is unaffected)")
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.subcommand)
        if args.seed is not None:
            if not 0 <= args.seed <= UINT64_MAX:
                raise ConfigError("seed must be a 64-bit unsigned integer", "--seed")
            cfg.values["experiment.seed"] = args.seed
        if args.workers < 1:
            raise ConfigError("must be >= 1", "--workers")
        if args.out is not None and not Path(args.out).resolve().parent.is_dir():
            raise OSError(f"cannot write {args.out}: directory does not exist")
        header, rows = COMMANDS[args.subcommand](cfg, args.workers)
        write_csv(header, rows, args.out)
    except ConfigError as exc:
        print(f"qclt: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, QcltError, np.linalg.LinAlgError) as exc:
        print(f"qclt: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"qclt: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

"""Command-line interface.

Subcommands::

    estimate  LOO and plug-in estimates at a fixed sieve dimension
    adapt     Lepski selection of J with the full candidate table
    simulate  raw Monte Carlo results for a config file
    rates     simulate, then RMSE tables, slopes and plot data

Exit codes: 0 success, 2 input or configuration error, 3 numerical or
estimator error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .basis import UNIFORM, BasisSpec, Family, WeightFn
from .config import config_to_dict, load_config, resolve_config_path, with_overrides
from .dgp import CDF_TOL
from .errors import InvalidInputError, NpivError
from .estimators import Sample, build_design, fit_npiv, quad_loo, quad_plugin
from .experiments import rows_to_csv, run_experiment, summarize
from .illposed import S_HAT_CUTOFF, tau_hat
from .lepski import adaptive_estimate
from .linalg import DEFAULT_TOL

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
DATA_COLUMNS = ("y", "x", "w")

log = logging.getLogger("npivquad")


class CliInputError(InvalidInputError):
    pass


def read_data_csv(path):
    """Read a ``y,x,w`` CSV and min-max rescale x and w to [0, 1].

    Returns the sample and a dict recording the affine maps.  Errors name
    the offending line (the header is line 1).
    """
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8-sig")
    except OSError as exc:
        raise CliInputError(f"{path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise CliInputError(f"{path}: file is empty")
        header = [h.strip().lower() for h in header]
        if sorted(header) != sorted(DATA_COLUMNS):
            raise CliInputError(f"{path}: line 1: header must be y,x,w, got {','.join(header)}")
        idx = [header.index(c) for c in DATA_COLUMNS]
        rows = []
        for record in reader:
            line = reader.line_num
            if not record or all(not f.strip() for f in record):
                continue
            if len(record) != 3:
                raise CliInputError(f"{path}: line {line}: expected 3 fields, got {len(record)}")
            vals = []
            for c, i in zip(DATA_COLUMNS, idx):
                try:
                    v = float(record[i])
                except ValueError:
                    raise CliInputError(f"{path}: line {line}: column {c}: cannot parse {record[i]!r}") from None
                if not math.isfinite(v):
                    raise CliInputError(f"{path}: line {line}: column {c} is {record[i].strip()}")
                vals.append(v)
            rows.append(vals)
    if len(rows) < 4:
        raise CliInputError(f"{path}: need at least 4 data rows, got {len(rows)}")
    y, x, w = np.array(rows).T
    rescaling = {}
    scaled = {}
    for name, a in (("x", x), ("w", w)):
        lo, hi = float(a.min()), float(a.max())
        if hi <= lo:
            raise CliInputError(f"{path}: column {name} is constant; min-max rescaling is undefined")
        scaled[name] = np.clip((a - lo) / (hi - lo), 0.0, 1.0)
        rescaling[name] = {"min": lo, "max": hi, "map": f"({name} - min) / (max - min)"}
    return Sample(y, scaled["x"], scaled["w"]), rescaling


def parse_weight(spec: str) -> WeightFn:
    if spec == "uniform":
        return UNIFORM
    if spec.startswith("file:"):
        return WeightFn.from_csv(spec[5:])
    raise CliInputError(f"--weight must be 'uniform' or 'file:<path>', got {spec!r}")


def _clean(obj):
    """Recursively turn numpy scalars into Python ones and non-finite floats into None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        return obj if math.isfinite(obj) else None
    if isinstance(obj, Family):
        return obj.value
    return obj


def _emit(payload, out):
    text = json.dumps(_clean(payload), indent=2) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")


def _tolerances():
    return {"rel_rank_tol": DEFAULT_TOL.rel_rank_tol, "s_hat_cutoff": S_HAT_CUTOFF, "cdf_tol": CDF_TOL}


def _data_config(args, **extra):
    cfg = {"data": str(args.data), "basis": args.basis, "order": args.order, "weight": args.weight}
    cfg.update(extra)
    return cfg


def cmd_estimate(args):
    sample, rescaling = read_data_csv(args.data)
    mu = parse_weight(args.weight)
    J = args.j
    K = J if args.k is None else args.k
    psi = BasisSpec(args.basis, J, args.order)
    design = build_design(sample, psi, psi.with_dim(K), mu)
    fit = fit_npiv(sample, design)
    warnings = []
    try:
        rep = tau_hat(design)
        tau, v = rep.tau_hat, rep.v_hat
    except ArithmeticError as exc:
        tau = v = None
        warnings.append(str(exc))
    if fit.rank_deficient:
        warnings.append("2SLS normal matrix is rank deficient; minimum-norm solution used")
    payload = {
        "version": __version__,
        "command": "estimate",
        "config": _data_config(args, j=J, k=K),
        "seed": args.seed,
        "f_loo": quad_loo(sample, design, fit.a_hat),
        "f_plugin": quad_plugin(fit),
        "j": J,
        "k": K,
        "tau_hat": tau,
        "v_hat": v,
        "n": sample.n,
        "rescaling": rescaling,
        "tolerances": _tolerances(),
        "warnings": warnings,
    }
    _emit(payload, args.out)
    return EXIT_OK


def cmd_adapt(args):
    sample, rescaling = read_data_csv(args.data)
    mu = parse_weight(args.weight)
    res = adaptive_estimate(sample, args.basis, mu, args.c0, args.order, args.k_offset)
    payload = {
        "version": __version__,
        "command": "adapt",
        "config": _data_config(args, c0=args.c0, k_offset=args.k_offset),
        "seed": args.seed,
        **res.as_dict(),
        "rescaling": rescaling,
        "tolerances": _tolerances(),
    }
    _emit(payload, args.out)
    return EXIT_OK


def _experiment_config(args):
    cfg = load_config(resolve_config_path(args.config))
    family = Family(args.basis) if args.basis is not None else None
    return with_overrides(cfg, master_seed=args.seed, replications=args.replications, c0=args.c0,
                          C0=args.C0, family=family, timing=True if args.timing else None)


def _write_raw(config, rows, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    raw = out / f"{config.name}_raw.csv"
    raw.write_text(rows_to_csv(rows), encoding="utf-8")
    return raw


def _header(config, command):
    return {"version": __version__, "command": command, "config": config_to_dict(config),
            "seed": config.master_seed}


def cmd_simulate(args):
    config = _experiment_config(args)
    rows = run_experiment(config, workers=args.workers)
    out = Path(args.out)
    raw = _write_raw(config, rows, out)
    n_fail = sum(not r.ok for r in rows)
    meta = {**_header(config, "simulate"), "raw_csv": raw.name, "rows": len(rows),
            "failures": n_fail, "failure_rate": n_fail / len(rows)}
    _emit(meta, out / f"{config.name}_run.json")
    log.info("wrote %s", raw)
    return EXIT_OK


def cmd_rates(args):
    config = _experiment_config(args)
    rows = run_experiment(config, workers=args.workers)
    out = Path(args.out)
    _write_raw(config, rows, out)
    report = summarize(config, rows)
    primary = "loo_optimal_j" if "loo_optimal_j" in config.estimators else config.estimators[0]
    slope = report.slopes.get(primary)
    payload = {
        **_header(config, "rates"),
        "slope_estimator": primary,
        "slope": None if slope is None else slope[0],
        "stderr": None if slope is None else slope[1],
        "theoretical_exponent": report.theoretical_exponent,
        "oracle_pass_rate": report.oracle_pass_rate,
        **{k: v for k, v in report.as_dict().items() if k not in ("theoretical_exponent", "oracle_pass_rate")},
    }
    _emit(payload, out / f"{config.name}_rates.json")
    for est in config.estimators:
        lines = ["n,rmse"] + [f"{c.n},{c.rmse!r}" for c in report.cells if c.estimator == est]
        (out / f"{config.name}_plot_{est}.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _nonneg_float(s):
    v = float(s)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative number, got {s}")
    return v


def _pos_float(s):
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {s}")
    return v


def _nonneg_int(s):
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {s}")
    return v


def build_parser():
    p = _Parser(prog="npivquad", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def data_flags(sp):
        sp.add_argument("--data", required=True, help="CSV with header y,x,w")
        sp.add_argument("--basis", default="cosine", choices=[f.value for f in Family])
        sp.add_argument("--order", type=_positive_int, default=4, help="B-spline order (4 = cubic)")
        sp.add_argument("--weight", default="uniform", help="uniform or file:<path> with columns x,mu")
        sp.add_argument("--seed", type=_nonneg_int, default=0, help="recorded for reproducibility")
        sp.add_argument("--out", default=None, help="JSON output file (default: stdout)")

    sp = sub.add_parser("estimate", help="estimate at a fixed sieve dimension")
    data_flags(sp)
    sp.add_argument("--j", type=_positive_int, required=True, help="sieve dimension J")
    sp.add_argument("--k", type=_positive_int, default=None, help="instrument dimension K >= J (default J)")
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("adapt", help="data-driven choice of J")
    data_flags(sp)
    sp.add_argument("--c0", type=_nonneg_float, default=0.5)
    sp.add_argument("--k-offset", type=_nonneg_int, default=0, help="use K = J + k_offset instruments")
    sp.set_defaults(func=cmd_adapt)

    for name, func, text in (("simulate", cmd_simulate, "raw Monte Carlo results"),
                             ("rates", cmd_rates, "Monte Carlo results with rate summary")):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config", required=True, help="config file or shipped config name")
        sp.add_argument("--out", default="results", help="output directory")
        sp.add_argument("--seed", type=_nonneg_int, default=None, help="override master_seed")
        sp.add_argument("--replications", type=int, default=None, help="override R")
        sp.add_argument("--c0", type=_pos_float, default=None)
        sp.add_argument("--C0", type=_pos_float, default=None)
        sp.add_argument("--basis", default=None, choices=[f.value for f in Family])
        sp.add_argument("--workers", type=_positive_int, default=1)
        sp.add_argument("--timing", action="store_true", help="record wall_ms (makes the CSV run dependent)")
        sp.set_defaults(func=func)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InvalidInputError, OSError) as exc:
        print(f"npivquad {args.command}: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NpivError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"npivquad {args.command}: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

"""Run shipped Monte Carlo configs and print a rate table.

Usage::

    python3 scripts/run_rates.py                     # every shipped config except smoke
    python3 scripts/run_rates.py severe --out results --replications 50
"""
import argparse
import json
import time
from pathlib import Path

from npivquad.config import load_config, shipped_config_path, shipped_configs, with_overrides
from npivquad.experiments import rows_to_csv, run_experiment, summarize


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("names", nargs="*", help="shipped config names (default: all but smoke)")
    ap.add_argument("--out", default="results")
    ap.add_argument("--replications", type=int, default=None)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    names = args.names or [n for n in shipped_configs() if n != "smoke"]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in names:
        cfg = with_overrides(load_config(shipped_config_path(name)), replications=args.replications)
        t0 = time.perf_counter()
        rows = run_experiment(cfg, workers=args.workers)
        secs = time.perf_counter() - t0
        rep = summarize(cfg, rows)
        (out / f"{cfg.name}_raw.csv").write_text(rows_to_csv(rows))
        (out / f"{cfg.name}_report.json").write_text(json.dumps(rep.as_dict(), indent=2, default=str) + "\n")
        print(f"== {cfg.name}: R={cfg.replications}, {secs:.0f} s, theoretical exponent "
              f"{rep.theoretical_exponent:.4f}, failure rate {rep.failure_rate:.4f}")
        for est in cfg.estimators:
            cells = [c for c in rep.cells if c.estimator == est]
            line = "  ".join(f"{c.n}:{c.rmse:.4f}" for c in cells)
            slope = rep.slope_of(est)
            tail = "" if slope is None else f"  slope {slope[0]:+.3f} ({slope[1]:.3f})"
            print(f"  {est:14s} {line}{tail}")
        if rep.oracle_pass_rate is not None:
            print(f"  oracle inequality pass fraction {rep.oracle_pass_rate:.3f}")


if __name__ == "__main__":
    main()

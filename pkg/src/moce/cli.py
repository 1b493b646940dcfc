"""Command-line interface.

    moce fit X.csv y.csv [--header] [--lambda L | --cv-folds K] [--C 8] ...
    moce test OUT/fit.npz --group 1,2,3 [--kind w1|wbs|both]
    moce simulate table2.cfg [--replicates N] [--jobs J] [--out-dir DIR]

Exit codes: 0 success, 2 usage or input error, 3 numerical failure.
Column indices in all user-facing output and group specs are 1-based.
"""

import argparse
import configparser
import csv
import os
import sys
import time
import warnings

import numpy as np

from . import __version__
from .debias import MoceFit, confidence_intervals
from .exceptions import DegenerateError, DimensionError, KKTViolationError
from .grouptest import group_test
from .lasso import standardize
from .pipeline import run_moce
from .reports import (SCHEMA_VERSION, coefficients_csv, dumps, file_digest, fit_table,
                      options_digest, replicates_csv, sim_table, test_table)
from .sim import SimConfig, aggregate_metrics, mean_seconds, run_replications

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class InputError(Exception):
    pass


def read_matrix(path, header=False):
    """Numeric CSV to a 2-D array; reports the row/column of bad cells."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    with fh:
        rows = list(csv.reader(fh))
    start = 1 if header else 0
    body = [(i + 1, r) for i, r in enumerate(rows[start:], start=start) if any(c.strip() for c in r)]
    if not body:
        raise InputError(f"{path}: no data rows")
    width = len(body[0][1])
    out = np.empty((len(body), width))
    for k, (line, row) in enumerate(body):
        if len(row) != width:
            raise InputError(f"{path}: row {line} has {len(row)} fields, expected {width}")
        for j, cell in enumerate(row):
            try:
                out[k, j] = float(cell)
            except ValueError:
                raise InputError(
                    f"{path}: non-numeric value {cell.strip()!r} at row {line}, column {j + 1}"
                ) from None
            if not np.isfinite(out[k, j]):
                raise InputError(f"{path}: non-finite value at row {line}, column {j + 1}")
    return out


def _manifest(command, options, seed, inputs):
    return {
        "command": command,
        "config_hash": options_digest(options),
        "seed": seed,
        "version": __version__,
        "inputs": {os.path.basename(p): file_digest(p) for p in inputs},
    }


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _write_timing(out_dir, manifest, seconds, extra=None):
    # wall-clock data lives apart from the reports so those stay byte-stable
    payload = dict(manifest, timing={"wall_seconds": seconds, **(extra or {})})
    _write(os.path.join(out_dir, "manifest.json"), dumps(payload))


# fit ----------------------------------------------------------------------

def cmd_fit(args):
    X = read_matrix(args.X, args.header)
    y = read_matrix(args.y, args.header)
    if y.shape[1] != 1:
        raise InputError(f"{args.y}: expected one column, found {y.shape[1]}")
    if X.shape[0] != y.shape[0]:
        raise InputError(f"dimension mismatch: X has {X.shape[0]} rows, y has {y.shape[0]}")
    if not 0 < args.level < 1:
        raise InputError("--level must lie strictly between 0 and 1")

    t0 = time.perf_counter()
    data = standardize(X, y[:, 0], scale=args.scale)
    res = run_moce(data, lam=args.lam, cv_folds=args.cv_folds, C=args.C, seed=args.seed,
                   tau_a=args.tau_a, tau_c=args.tau_c)
    seconds = time.perf_counter() - t0
    mf, ex, fit = res.moce, res.expanded, res.lasso
    ci = confidence_intervals(mf, args.level)

    options = {k: v for k, v in vars(args).items() if k not in ("func", "X", "y", "out_dir")}
    manifest = _manifest("fit", options, args.seed, [args.X, args.y])
    in_exp = np.zeros(data.p, bool)
    in_exp[ex.indices] = True
    raw = {name: data.to_raw_coef(v) for name, v in
           (("beta_hat", fit.beta), ("estimate", mf.beta_tilde), ("se", ci.se),
            ("lower", ci.lower), ("upper", ci.upper))}
    std = np.full(data.p_raw, np.nan)
    std[data.kept] = mf.beta_tilde
    pos = {int(c): k for k, c in enumerate(data.kept)}
    coefs = []
    for j in range(data.p_raw):
        k = pos.get(j)
        coefs.append({
            "column": j + 1,
            "dropped": k is None,
            "in_expanded": bool(k is not None and in_exp[k]),
            "degenerate": bool(k is None or ci.degenerate[k]),
            "estimate_standardized": std[j],
            **{name: v[j] for name, v in raw.items()},
        })

    def one(idx):
        return one_based(data.kept[idx])

    report = {
        "schema_version": SCHEMA_VERSION,
        "manifest": manifest,
        "level": args.level,
        "data": {"n": data.n, "p": data.p_raw, "dropped_columns": one_based(data.dropped),
                 "scale": data.scale},
        "lasso": {"lambda": fit.lam, "cross_validated": res.cv_used,
                  "sigma_hat": mf.sigma_hat, "sigma_degenerate": bool(
                      fit.sigma_degenerate or mf.sigma_hat == 0.0),
                  "a_hat": fit.a_hat, "selected": one(fit.active_set),
                  "converged": fit.converged, "degenerate_response": res.degenerate},
        "expansion": {"a_tilde": ex.a_tilde, "indices": one(ex.indices),
                      "injected": one(ex.injected), "filled": one(ex.filled),
                      "truncated": ex.truncated, "lambda_s": ex.lambda_s,
                      "lambda_a": ex.lambda_a, "tau_a": ex.tau_a, "tau_c": ex.tau_c,
                      "tau_degenerate": ex.tau_degenerate, "C": args.C, "seed": ex.seed,
                      "rng": ex.rng},
        "coefficients": coefs,
    }
    os.makedirs(args.out_dir, exist_ok=True)
    _write(os.path.join(args.out_dir, "report.json"), dumps(report))
    _write(os.path.join(args.out_dir, "report.txt"), fit_table(report))
    with open(os.path.join(args.out_dir, "fit.npz"), "wb") as fh:
        np.savez(fh, loadings=mf.loadings, beta_tilde=mf.beta_tilde, beta_hat=mf.beta_hat,
                 sigma_hat=mf.sigma_hat, n=mf.n, lam=mf.lam, kept=data.kept,
                 p_raw=data.p_raw, expanded=ex.indices, schema_version=SCHEMA_VERSION)
    _write_timing(args.out_dir, manifest, seconds)
    if not args.quiet:
        sys.stdout.write(fit_table(report))
    return EXIT_OK


def one_based(idx):
    return [int(i) + 1 for i in idx]


# test ---------------------------------------------------------------------

def load_fit(path):
    """Rebuild the pieces of a fit needed for group tests from ``fit.npz``."""
    try:
        z = np.load(path)
    except (OSError, ValueError) as exc:
        raise InputError(f"{path}: cannot read fit artifact ({exc})") from None
    with z:
        mf = MoceFit(beta_tilde=z["beta_tilde"], beta_hat=z["beta_hat"], lam=float(z["lam"]),
                     kappa=None, expanded=None, sigma_hat=float(z["sigma_hat"]),
                     n=int(z["n"]), factor=None, loadings=z["loadings"])
        return mf, z["kept"].copy(), int(z["p_raw"])


def parse_group(text, p_raw, kept):
    try:
        cols = [int(t) for t in text.replace(" ", "").split(",") if t != ""]
    except ValueError:
        raise InputError(f"--group must be comma-separated integers, got {text!r}") from None
    if not cols:
        raise InputError("--group is empty")
    bad = [c for c in cols if not 1 <= c <= p_raw]
    if bad:
        raise InputError(f"group index {bad[0]} outside 1..{p_raw}")
    pos = np.full(p_raw, -1)
    pos[kept] = np.arange(kept.size)
    G = pos[np.array(cols) - 1]
    if np.any(G < 0):
        raise InputError("group contains a constant (dropped) column")
    return cols, G


def cmd_test(args):
    mf, kept, p_raw = load_fit(args.fit)
    cols, G = parse_group(args.group, p_raw, kept)
    levels = tuple(sorted({0.01, 0.05, 0.10, args.level}))
    try:
        res = group_test(mf, G, kind=args.kind, levels=levels)
    except DimensionError as exc:
        raise InputError(str(exc)) from None
    res = res if isinstance(res, list) else [res]
    out = []
    for r in res:
        d = r.to_dict()
        d["group"] = cols
        d["reject"] = r.reject(args.level)
        out.append(d)
    report = {"schema_version": SCHEMA_VERSION, "level": args.level,
              "manifest": _manifest("test", {"group": cols, "kind": args.kind,
                                             "level": args.level}, None, [args.fit]),
              "tests": out}
    if args.out:
        _write(args.out, dumps(report))
    if not args.quiet:
        sys.stdout.write(test_table(out) if args.format == "table" else dumps(report))
    return EXIT_OK


# simulate -----------------------------------------------------------------

def cmd_simulate(args):
    try:
        cfg = SimConfig.from_file(args.config)
    except KeyError as exc:
        raise InputError(f"{args.config}: unknown config key {exc.args[0]!r}") from None
    except (ValueError, TypeError, configparser.Error) as exc:
        raise InputError(f"{args.config}: {exc}") from None
    overrides = {k: v for k, v in (("replicates", args.replicates), ("seed", args.seed))
                 if v is not None}
    if overrides:
        try:
            cfg = SimConfig.from_mapping({**cfg.to_dict(), **overrides})
        except ValueError as exc:
            raise InputError(str(exc)) from None
    if args.jobs < 1:
        raise InputError("--jobs must be at least 1")

    t0 = time.perf_counter()
    records = run_replications(cfg, jobs=args.jobs)
    seconds = time.perf_counter() - t0
    try:
        report = aggregate_metrics(records, cfg).to_dict()
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_NUMERIC
    manifest = _manifest("simulate", cfg.to_dict(), cfg.seed, [args.config])
    manifest["config_hash"] = cfg.digest()
    report = {"schema_version": SCHEMA_VERSION, "manifest": manifest, **report}

    os.makedirs(args.out_dir, exist_ok=True)
    _write(os.path.join(args.out_dir, "report.json"), dumps(report))
    _write(os.path.join(args.out_dir, "report.txt"), sim_table(report))
    _write(os.path.join(args.out_dir, "replicates.csv"), replicates_csv(records))
    _write(os.path.join(args.out_dir, "coefficients.csv"), coefficients_csv(records))
    _write_timing(args.out_dir, manifest, seconds,
                  {"mean_fit_seconds": mean_seconds(records), "jobs": args.jobs})
    if not args.quiet:
        sys.stdout.write(sim_table(report))
    return EXIT_OK


# entry point --------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="moce", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"moce {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="fit a CSV data set and write inference reports")
    f.add_argument("X")
    f.add_argument("y")
    f.add_argument("--header", action="store_true", help="skip a header row in both files")
    sel = f.add_mutually_exclusive_group()
    sel.add_argument("--lambda", dest="lam", type=float, default=None,
                     help="LASSO penalty on the standardized scale")
    sel.add_argument("--cv-folds", type=int, default=10)
    f.add_argument("--C", type=float, default=8.0)
    f.add_argument("--level", type=float, default=0.95)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--tau-a", type=float, default=None)
    f.add_argument("--tau-c", type=float, default=None)
    f.add_argument("--scale", choices=("variance", "norm"), default="variance")
    f.add_argument("--out-dir", default="moce_out")
    f.add_argument("--quiet", action="store_true")
    f.set_defaults(func=cmd_fit)

    t = sub.add_parser("test", help="group tests on a saved fit")
    t.add_argument("fit", help="fit.npz written by 'moce fit'")
    t.add_argument("--group", required=True, help="1-based columns, e.g. 1,4,7")
    t.add_argument("--kind", choices=("w1", "wbs", "both"), default="wbs")
    t.add_argument("--level", type=float, default=0.05)
    t.add_argument("--out", default=None, help="also write the JSON report here")
    t.add_argument("--format", choices=("table", "json"), default="table")
    t.add_argument("--quiet", action="store_true")
    t.set_defaults(func=cmd_test)

    s = sub.add_parser("simulate", help="run a simulation study from a config file")
    s.add_argument("config")
    s.add_argument("--replicates", type=int, default=None)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--out-dir", default="sim_out")
    s.add_argument("--quiet", action="store_true")
    s.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore" if getattr(args, "quiet", False) else "default")
            return args.func(args)
    except (InputError, DimensionError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except (DegenerateError, KKTViolationError, ArithmeticError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

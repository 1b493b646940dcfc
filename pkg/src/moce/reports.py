"""Serialization of fit and simulation results: JSON, aligned text tables and
CSV.  Nothing written here depends on wall-clock time, so identical inputs
give identical bytes."""

import csv
import hashlib
import io
import json
import math

import numpy as np

SCHEMA_VERSION = 1
FLOAT_FMT = "%.17g"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj):
    """Canonical JSON: sorted keys, non-finite floats as null."""
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def options_digest(options):
    return hashlib.sha256(dumps(options).encode()).hexdigest()


def _fmt(x, width=8, digits=3):
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        return "-".rjust(width)
    return f"{x:{width}.{digits}f}"


# fit ----------------------------------------------------------------------

def fit_table(report):
    lines = [
        f"MOCE fit: n={report['data']['n']}  p={report['data']['p']}  "
        f"lambda={report['lasso']['lambda']:.6g}  sigma_hat={report['lasso']['sigma_hat']:.6g}",
        f"a_hat={report['lasso']['a_hat']}  a_tilde={report['expansion']['a_tilde']}  "
        f"level={report['level']}",
        "",
        f"{'col':>5} {'lasso':>10} {'moce':>10} {'se':>10} {'lower':>10} {'upper':>10}  flags",
    ]
    for c in report["coefficients"]:
        flags = []
        if c["in_expanded"]:
            flags.append("A")
        if c["dropped"]:
            flags.append("dropped")
        if c["degenerate"]:
            flags.append("point")
        lines.append(
            f"{c['column']:>5} {_fmt(c['beta_hat'], 10, 5)} {_fmt(c['estimate'], 10, 5)} "
            f"{_fmt(c['se'], 10, 5)} {_fmt(c['lower'], 10, 5)} {_fmt(c['upper'], 10, 5)}  "
            + ",".join(flags))
    return "\n".join(lines) + "\n"


def test_table(results):
    lines = [f"{'kind':>5} {'g':>4} {'statistic':>12} {'p_value':>12} {'reference':>10}  reject"]
    for r in results:
        rej = " ".join(f"{k}:{'yes' if v else 'no'}" for k, v in r["reject_at"].items())
        lines.append(f"{r['kind']:>5} {r['g']:>4} {r['statistic']:12.5g} {r['p_value']:12.5g} "
                     f"{r['reference']:>10}  {rej}")
    return "\n".join(lines) + "\n"


# simulation ---------------------------------------------------------------

_COLS = ("bias", "ase", "cp99", "cp95", "cp90")


def sim_table(report):
    cfg = report["config"]
    head = (f"n={cfg.get('n')} p={cfg.get('p')} a={cfg.get('a')} alpha={cfg.get('alpha')} "
            f"C={cfg.get('C')} error={cfg.get('error_law')} "
            f"replicates={report['replicates']} failures={len(report['failures'])}")
    cols = "".join(f"{c.upper():>8}" for c in _COLS)
    lines = [head, "", f"{'method':<8}{'set':<5}{cols}"]
    for method in ("moce", "oracle"):
        m = report.get(method) or {}
        if not m:
            continue
        for s in ("A", "Ac"):
            vals = "".join(_fmt(m.get(f"{c}_{s}")) for c in _COLS)
            lines.append(f"{method:<8}{s:<5}{vals}")
    if report["power"]:
        lines += ["", f"{'|G|':>5}{'|G∩A|':>7}{'kind':>6}{'rate':>8}{'valid':>7}"]
        for row in report["power"]:
            lines.append(f"{row['g']:>5}{row['ga']:>7}{row['kind']:>6}"
                         f"{_fmt(row['rate'])}{row['valid']:>7}")
    if report.get("diagnostics"):
        lines += [""] + [f"{k}: {v:.6g}" for k, v in sorted(report["diagnostics"].items())]
    return "\n".join(lines) + "\n"


REPLICATE_FIELDS = ("index", "ok", "error", "lam", "sigma_hat", "a_hat", "a_tilde",
                    "truncated", "false_negatives", "variance_ordered",
                    "remainder_sqrt_n", "l2_ratio")
COEF_FIELDS = ("index", "j", "in_support", "in_expanded", "beta_star", "beta_hat",
               "beta_tilde", "se")


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT % v
    return str(v)


def replicates_csv(records):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPLICATE_FIELDS)
    for r in records:
        w.writerow([_cell(getattr(r, f)) for f in REPLICATE_FIELDS])
    return buf.getvalue()


def coefficients_csv(records):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COEF_FIELDS)
    for r in records:
        if not r.ok:
            continue
        p = r.beta_star.size
        sup = np.zeros(p, bool)
        sup[r.support] = True
        exp = np.zeros(p, bool)
        exp[r.expanded] = True
        for j in range(p):
            w.writerow([r.index, j, _cell(sup[j]), _cell(exp[j]), _cell(r.beta_star[j]),
                        _cell(r.beta_hat[j]), _cell(r.beta_tilde[j]), _cell(r.se[j])])
    return buf.getvalue()


def read_csv_columns(text):
    """Parse a CSV written by this module back into float columns."""
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    out = {}
    for k, name in enumerate(header):
        col = [row[k] for row in body]
        try:
            out[name] = np.array([float(v) for v in col])
        except ValueError:
            out[name] = col
    return out

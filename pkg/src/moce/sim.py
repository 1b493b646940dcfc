"""Monte-Carlo harness: data generation, replicate orchestration and the
Bias/ASE/CP and rejection-rate summaries.

Randomness
----------
Replicate ``i`` of a study with base seed ``s`` draws its data from
``numpy.random.default_rng(SeedSequence([s, i]))`` in this order: design
innovations, support, coefficients, errors.  Test groups come from
``SeedSequence([s, i, 1])``.  The integer seed handed to cross-validation and
noise injection is the first 32-bit word of ``SeedSequence([s, i, 2])``.
Results therefore depend only on ``(s, i)``, never on scheduling.
"""

import configparser
import dataclasses
import hashlib
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from scipy.stats import norm
from threadpoolctl import threadpool_limits

from .debias import remainders
from .exceptions import MOCEError
from .expand import DEFAULT_C
from .grouptest import wald_w1, wald_wbs
from .lasso import standardize
from .pipeline import run_moce

CP_LEVELS = (0.99, 0.95, 0.90)
TEST_LEVEL = 0.05
ERROR_LAWS = ("gaussian", "t5")
T_DF = 5


@dataclass(frozen=True)
class SimConfig:
    n: int = 200
    p: int = 200
    a: int = 3
    alpha: float = 0.0
    replicates: int = 200
    seed: int = 0
    error_law: str = "gaussian"
    C: float = DEFAULT_C
    cv_folds: int = 10
    group_specs: tuple = ()
    true_sigma_tests: bool = False
    oracle: bool = True
    beta_low: float = 0.05
    beta_high: float = 0.6

    def __post_init__(self):
        if not (self.n >= 4 and self.p >= 2):
            raise ValueError("need n >= 4 and p >= 2")
        if not 1 <= self.a < self.p:
            raise ValueError("need 1 <= a < p")
        if self.a >= self.n - 1:
            raise ValueError("need a < n - 1 for the oracle fit")
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError("alpha must lie in [0, 1)")
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if self.error_law not in ERROR_LAWS:
            raise ValueError(f"error_law must be one of {ERROR_LAWS}")
        specs = tuple((int(g), int(ga)) for g, ga in self.group_specs)
        for g, ga in specs:
            if not (1 <= g < self.n and 0 <= ga <= min(g, self.a) and g - ga <= self.p - self.a):
                raise ValueError(f"invalid group spec |G|={g}, |G∩A|={ga}")
        object.__setattr__(self, "group_specs", specs)

    @property
    def sigma(self):
        """Noise scale ``2 sqrt(a / n)``."""
        return 2.0 * math.sqrt(self.a / self.n)

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["group_specs"] = [list(s) for s in self.group_specs]
        return d

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    @classmethod
    def from_mapping(cls, mapping):
        known = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, value in mapping.items():
            if key not in known:
                raise KeyError(key)
            kwargs[key] = _coerce(key, value, known[key].default)
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path):
        """Read ``key = value`` lines (optionally under a ``[simulation]``
        header).  ``group_specs`` is written as ``5:0, 5:2, 50:0``."""
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        parser.optionxform = str
        try:
            parser.read_string(text)
        except configparser.MissingSectionHeaderError:
            parser.read_string("[simulation]\n" + text)
        if parser.sections() != ["simulation"]:
            raise ValueError(f"expected a single [simulation] section, found {parser.sections()}")
        return cls.from_mapping(dict(parser["simulation"]))


def _coerce(key, value, default):
    if not isinstance(value, str):
        return value
    value = value.strip()
    if key == "group_specs":
        specs = []
        for item in filter(None, (s.strip() for s in value.split(","))):
            g, ga = item.split(":")
            specs.append((int(g), int(ga)))
        return tuple(specs)
    if isinstance(default, bool):
        if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"{key}: expected a boolean, got {value!r}")
        return value.lower() in ("true", "1", "yes")
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    return value


# data ---------------------------------------------------------------------

def _streams(seed, idx):
    data = np.random.default_rng(np.random.SeedSequence([seed, idx]))
    groups = np.random.default_rng(np.random.SeedSequence([seed, idx, 1]))
    proc = int(np.random.SeedSequence([seed, idx, 2]).generate_state(1)[0])
    return data, groups, proc


def ar1_design(rng, n, p, alpha, scale=0.5):
    """Rows i.i.d. ``N(0, scale * R(alpha))`` with ``R_jk = alpha^|j-k|``,
    generated column by column as a stationary AR(1) recursion."""
    Z = rng.standard_normal((n, p))
    X = np.empty_like(Z)
    X[:, 0] = Z[:, 0]
    c = math.sqrt(1.0 - alpha ** 2)
    for j in range(1, p):
        X[:, j] = alpha * X[:, j - 1] + c * Z[:, j]
    return math.sqrt(scale) * X


def generate_dataset(config, rng):
    """One data set; returns ``(Dataset, beta_star, support)``.

    Columns are standardized before the response is formed, so ``beta_star``
    lives on the working scale.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    n, p, a = config.n, config.p, config.a
    X = standardize(ar1_design(rng, n, p, config.alpha), np.zeros(n)).X
    support = np.sort(rng.choice(p, size=a, replace=False))
    beta = np.zeros(p)
    beta[support] = rng.uniform(config.beta_low, config.beta_high, size=a)
    if config.error_law == "gaussian":
        eps = config.sigma * rng.standard_normal(n)
    else:
        eps = config.sigma * math.sqrt((T_DF - 2) / T_DF) * rng.standard_t(T_DF, size=n)
    return standardize(X, X @ beta + eps), beta, support


# replicates ---------------------------------------------------------------

def oracle_fit(data, support):
    """Least squares on the true support; returns (coef, se)."""
    Xs = data.X[:, support]
    coef, *_ = np.linalg.lstsq(Xs, data.y, rcond=None)
    r = data.y - Xs @ coef
    s2 = r @ r / (data.n - support.size)
    cov = s2 * np.linalg.inv(Xs.T @ Xs)
    return coef, np.sqrt(np.diag(cov))


def draw_group(rng, support, p, g, ga):
    nulls = np.setdiff1d(np.arange(p), support)
    G = np.concatenate([rng.choice(support, ga, replace=False),
                        rng.choice(nulls, g - ga, replace=False)])
    return np.sort(G).astype(np.intp)


@dataclass
class ReplicateRecord:
    index: int
    ok: bool
    error: str = ""
    seconds: float = 0.0
    support: np.ndarray = None
    beta_star: np.ndarray = None
    beta_hat: np.ndarray = None
    beta_tilde: np.ndarray = None
    se: np.ndarray = None
    expanded: np.ndarray = None
    lam: float = float("nan")
    sigma_hat: float = float("nan")
    a_hat: int = 0
    a_tilde: int = 0
    truncated: bool = False
    false_negatives: int = 0
    variance_ordered: bool = False
    remainder_sqrt_n: float = float("nan")
    l2_ratio: float = float("nan")
    oracle_coef: np.ndarray = None
    oracle_se: np.ndarray = None
    tests: list = field(default_factory=list)


def run_replication(config, idx):
    """Fit one replicate; numerical failures are captured in the record."""
    rng, grng, proc_seed = _streams(config.seed, idx)
    data, beta, support = generate_dataset(config, rng)
    groups = [(g, ga, draw_group(grng, support, config.p, g, ga))
              for g, ga in config.group_specs]
    rec = ReplicateRecord(idx, False, support=support, beta_star=beta)
    t0 = time.perf_counter()
    try:
        with threadpool_limits(1):
            res = run_moce(data, cv_folds=config.cv_folds, C=config.C, seed=proc_seed)
    except (MOCEError, ArithmeticError, np.linalg.LinAlgError) as exc:
        rec.error = f"{type(exc).__name__}: {exc}"
        rec.seconds = time.perf_counter() - t0
        return rec
    rec.seconds = time.perf_counter() - t0
    mf, ex = res.moce, res.expanded
    rec.ok = True
    rec.beta_hat, rec.beta_tilde, rec.se = mf.beta_hat, mf.beta_tilde, mf.se
    rec.expanded = ex.indices
    rec.lam, rec.sigma_hat = res.lasso.lam, mf.sigma_hat
    rec.a_hat, rec.a_tilde, rec.truncated = res.lasso.a_hat, ex.a_tilde, ex.truncated
    rec.false_negatives = int(ex.false_negatives(support).size)

    var = mf.sandwich_diag
    comp = ex.complement(config.p)
    rec.variance_ordered = bool(comp.size == 0 or var[ex.indices].min() >= var[comp].max())
    r_a, r_c = remainders(mf, beta)
    rec.remainder_sqrt_n = float(np.sqrt(r_a @ r_a + r_c @ r_c) * np.sqrt(config.n))
    at = ex.a_tilde
    err = mf.beta_tilde[ex.indices] - beta[ex.indices]
    rec.l2_ratio = float(np.linalg.norm(err) / np.sqrt(max(at * np.log(max(at, 2)), 1.0) / config.n))

    if config.oracle:
        rec.oracle_coef, rec.oracle_se = oracle_fit(data, support)

    sigma = config.sigma if config.true_sigma_tests else None
    for g, ga, G in groups:
        for kind, fn in (("w1", wald_w1), ("wbs", wald_wbs)):
            try:
                t = fn(mf, G, sigma=sigma)
                stat, p = t.statistic, t.p_value
            except (MOCEError, ArithmeticError):
                stat, p = float("nan"), float("nan")
            rec.tests.append({"g": g, "ga": ga, "kind": kind, "statistic": stat, "p_value": p})
    return rec


def run_replications(config, jobs=1, indices=None):
    """All replicates, ordered by index whatever the worker count."""
    indices = range(config.replicates) if indices is None else indices
    if jobs == 1:
        recs = [run_replication(config, i) for i in indices]
    else:
        recs = Parallel(n_jobs=jobs)(delayed(run_replication)(config, i) for i in indices)
    return sorted(recs, key=lambda r: r.index)


# aggregation --------------------------------------------------------------

@dataclass
class SimReport:
    config: dict
    replicates: int
    failures: list
    moce: dict
    oracle: dict
    power: list
    diagnostics: dict

    def to_dict(self):
        return dataclasses.asdict(self)


def _set_metrics(est, se, beta, support, p):
    """Per-replicate Bias, ASE and CP over A and its complement."""
    null = np.setdiff1d(np.arange(p), support)
    out = {}
    for name, idx in (("A", support), ("Ac", null)):
        out[f"bias_{name}"] = float(np.mean(est[idx] - beta[idx]))
        out[f"ase_{name}"] = float(np.mean(se[idx]))
        for lev in CP_LEVELS:
            z = norm.ppf(0.5 + lev / 2.0)
            cover = np.abs(est[idx] - beta[idx]) <= z * se[idx]
            out[f"cp{round(lev * 100)}_{name}"] = float(np.mean(cover))
    return out


def _average(rows):
    keys = rows[0].keys()
    return {k: float(np.mean([r[k] for r in rows])) for k in keys}


def aggregate_metrics(records, config=None):
    """Replicate-averaged metrics; failed replicates are counted and listed."""
    good = [r for r in records if r.ok]
    if not good:
        raise ValueError("no successful replicates to aggregate")
    p = good[0].beta_star.size
    moce = _average([_set_metrics(r.beta_tilde, r.se, r.beta_star, r.support, p)
                     for r in good])
    oracle = {}
    if good[0].oracle_coef is not None:
        rows = []
        for r in good:
            est = np.zeros(p)
            se = np.zeros(p)
            est[r.support], se[r.support] = r.oracle_coef, r.oracle_se
            rows.append(_set_metrics(est, se, r.beta_star, r.support, p))
        oracle = _average(rows)
    diagnostics = {
        "mean_a_hat": float(np.mean([r.a_hat for r in good])),
        "mean_a_tilde": float(np.mean([r.a_tilde for r in good])),
        "truncated_fraction": float(np.mean([r.truncated for r in good])),
        "false_negative_rate": float(np.mean([r.false_negatives for r in good])
                                     / good[0].support.size),
        "variance_ordered_fraction": float(np.mean([r.variance_ordered for r in good])),
        "remainder_below_half_fraction": float(np.mean(
            [r.remainder_sqrt_n < 0.5 for r in good])),
        "max_l2_ratio": float(np.max([r.l2_ratio for r in good])),
    }
    return SimReport(
        config=config.to_dict() if config is not None else {},
        replicates=len(good),
        failures=[{"index": r.index, "error": r.error} for r in records if not r.ok],
        moce=moce, oracle=oracle, power=power_table(good), diagnostics=diagnostics)


def power_table(records, level=TEST_LEVEL):
    """Rejection rate per (|G|, |G∩A|, kind) at ``level``.

    A test that cannot be computed (e.g. W1 with a singular block) does not
    reject: ``rate`` counts it as acceptance, ``rate_valid`` excludes it.
    """
    cells = {}
    for r in records:
        for t in r.tests:
            cells.setdefault((t["g"], t["ga"], t["kind"]), []).append(t["p_value"])
    out = []
    for (g, ga, kind), ps in sorted(cells.items()):
        ps = np.asarray(ps, dtype=float)
        valid = ps[~np.isnan(ps)]
        rejections = int(np.sum(valid < level))
        out.append({"g": g, "ga": ga, "kind": kind, "level": level,
                    "rate": rejections / ps.size,
                    "rate_valid": rejections / valid.size if valid.size else float("nan"),
                    "valid": int(valid.size), "undefined": int(ps.size - valid.size)})
    return out


def run_power_study(config, jobs=1):
    """Rejection-rate table for the configured group specs."""
    if not config.group_specs:
        raise ValueError("config has no group_specs")
    return power_table([r for r in run_replications(config, jobs) if r.ok])


def run_study(config, jobs=1):
    """Replicates plus their aggregate; returns (records, SimReport)."""
    records = run_replications(config, jobs)
    return records, aggregate_metrics(records, config)


def mean_seconds(records):
    return float(np.mean([r.seconds for r in records]))

"""Reproducible Monte Carlo experiments over grids of ``(n, p, q)``.

Replicate ``r`` uses seed ``base_seed + r``.  From that seed the true
assignment is drawn on the ``THETA_STREAM``, the graph on the default
stream (so ``sample_graph(params, theta0, seed)`` reproduces it), and MCMC
chain ``c`` on ``CHAIN_STREAM`` with seed ``seed * chains + c``.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from collections import defaultdict
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import (
    DEFAULT_C,
    bound_report,
    detect_mass_bound,
    recovery_mass_bound,
    regime_indicators,
)
from .exceptions import ConfigError
from .graphmodel import (
    DEFAULT_ENUMERATION_CAP,
    DEFAULT_RNG,
    ClassAssignment,
    ModelParams,
    k_distances,
    num_assignments,
    overlap,
    sample_assignment,
    sample_graph,
)
from .io import format_float, write_posterior_csv
from .posterior import ChainConfig, exact_posterior, mh_sampler, posterior_mass
from .uncertainty import (
    binomial_interval,
    coverage_lower_bound,
    enlarge,
    minimal_diameter_credible,
    minimal_order_credible,
)

TASKS = ("recovery", "detection", "coverage", "bound-check", "posterior-dump")
PARAM_KINDS = ("pq", "ab", "cd")
LEVEL_RULES = ("fixed", "bn_over_n", "bn_fraction")
KN_RULES = ("fixed", "beta", "zero", "sqrt")
ENGINES = ("exact", "mcmc")
CONSTRUCTIONS = ("minimal-order", "minimal-diameter")

ROW_FIELDS = ("task", "n", "p", "q", "replicate", "seed", "statistic", "value",
              "bound", "vacuous", "wall_time")
AGG_FIELDS = ("task", "n", "p", "q", "statistic", "count", "mean", "stderr",
              "ci_low", "ci_high", "bound", "vacuous")

# statistics that are 0/1 indicators get a Wilson interval in the aggregates
_INDICATORS = {"map_is_truth", "theta0_in_D", "theta0_in_C"}


@dataclass(frozen=True)
class ExperimentConfig:
    task: str
    n_grid: tuple
    param_kind: str = "pq"
    param_values: tuple = ((0.8, 0.2),)
    replicates: int = 100
    base_seed: int = 0
    level_rule: str = "bn_fraction"
    level_value: float = 0.1
    kn_rule: str = "fixed"
    kn_value: float = 1
    engine: str = "exact"
    chain: ChainConfig = field(default_factory=ChainConfig)
    output_dir: str | None = None
    fixed_theta0: str | None = None
    construction: str = "minimal-order"
    C: float = DEFAULT_C
    delta: float = 0.1
    A: float = 1.0
    rng: str = DEFAULT_RNG
    cap: int = DEFAULT_ENUMERATION_CAP

    def __post_init__(self):
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        object.__setattr__(self, "param_values",
                           tuple(tuple(float(x) for x in pair) for pair in self.param_values))
        if self.task not in TASKS:
            raise ConfigError(f"task must be one of {TASKS}, got {self.task!r}")
        if not self.n_grid or any(n < 1 for n in self.n_grid):
            raise ConfigError("n_grid must be a non-empty list of positive integers")
        if self.param_kind not in PARAM_KINDS:
            raise ConfigError(f"param kind must be one of {PARAM_KINDS}")
        if not self.param_values or any(len(pv) != 2 for pv in self.param_values):
            raise ConfigError("param values must be a non-empty list of pairs")
        if self.replicates < 1:
            raise ConfigError("replicates must be positive")
        if self.level_rule not in LEVEL_RULES:
            raise ConfigError(f"level rule must be one of {LEVEL_RULES}")
        if self.level_value < 0:
            raise ConfigError("level value must be non-negative")
        if self.kn_rule not in KN_RULES:
            raise ConfigError(f"k_n rule must be one of {KN_RULES}")
        if self.kn_rule == "beta" and not 0 < self.kn_value < 1:
            raise ConfigError("beta must lie in (0, 1)")
        if self.engine not in ENGINES:
            raise ConfigError(f"engine must be one of {ENGINES}")
        if self.construction not in CONSTRUCTIONS:
            raise ConfigError(f"construction must be one of {CONSTRUCTIONS}")
        if self.fixed_theta0 is not None and self.fixed_theta0 != "block":
            if set(self.fixed_theta0) - {"0", "1"}:
                raise ConfigError("fixed_theta0 must be 'block' or a bit string")
        for n in self.n_grid:
            for pair in self.param_values:
                p, q = self._to_pq(n, pair)
                if not (0.0 <= p <= 1.0 and 0.0 <= q <= 1.0):
                    raise ConfigError(
                        f"{self.param_kind}={pair} gives p={p}, q={q} outside [0, 1] at n={n}"
                    )

    def _to_pq(self, n, pair):
        x, y = pair
        if self.param_kind == "pq":
            return x, y
        if self.param_kind == "cd":
            return x / n, y / n
        if n < 2:
            raise ConfigError("(a, b) parametrisation needs n >= 2")
        s = math.log(n) / n
        return x * s, y * s

    def cells(self):
        return [(n, *self._to_pq(n, pair)) for n in self.n_grid for pair in self.param_values]

    def credible_deficit(self, n):
        b_n = 1.0 / num_assignments(n)
        if self.level_rule == "fixed":
            return self.level_value
        if self.level_rule == "bn_over_n":
            return b_n / n
        return b_n * self.level_value

    def k_n(self, n):
        top = n // 2
        if self.kn_rule == "zero":
            return 0
        if self.kn_rule == "fixed":
            k = int(self.kn_value)
        elif self.kn_rule == "beta":
            k = math.ceil(self.kn_value * n)
        else:
            k = math.ceil(math.sqrt(n))
        if k < 0:
            raise ConfigError("k_n must be non-negative")
        return min(k, top)

    def theta0(self, n, seed):
        if self.fixed_theta0 is None:
            return sample_assignment(n, seed, self.rng)
        if self.fixed_theta0 == "block":
            return ClassAssignment(n, (0,) * n + (1,) * n)
        if len(self.fixed_theta0) != 2 * n:
            raise ConfigError(f"fixed_theta0 has length {len(self.fixed_theta0)}, need {2 * n}")
        return ClassAssignment.from_string(self.fixed_theta0)

    @classmethod
    def from_dict(cls, d):
        """Build from the JSON tree layout documented in the README."""
        d = dict(d)
        kw = {}
        try:
            kw["task"] = d.pop("task")
            kw["n_grid"] = d.pop("n_grid")
        except KeyError as exc:
            raise ConfigError(f"missing required key {exc.args[0]!r}") from None
        if "params" in d:
            params = d.pop("params")
            kw["param_kind"] = params.get("kind", "pq")
            kw["param_values"] = params.get("values", ((0.8, 0.2),))
        if "level" in d:
            level = d.pop("level")
            kw["level_rule"] = level.get("rule", "bn_fraction")
            kw["level_value"] = level.get("value", 0.1)
        if "k_n" in d:
            kn = d.pop("k_n")
            kw["kn_rule"] = kn.get("rule", "fixed")
            kw["kn_value"] = kn.get("value", 1)
        if "chain" in d:
            try:
                kw["chain"] = ChainConfig(**d.pop("chain"))
            except TypeError as exc:
                raise ConfigError(f"bad chain settings: {exc}") from None
        if "bounds" in d:
            b = d.pop("bounds")
            for key in ("C", "delta", "A"):
                if key in b:
                    kw[key] = b[key]
        for key in ("replicates", "base_seed", "engine", "output_dir", "fixed_theta0",
                    "construction", "rng", "cap"):
            if key in d:
                kw[key] = d.pop(key)
        if d:
            raise ConfigError(f"unknown config keys: {sorted(d)}")
        return cls(**kw)

    def to_dict(self):
        return {
            "task": self.task,
            "n_grid": list(self.n_grid),
            "params": {"kind": self.param_kind, "values": [list(v) for v in self.param_values]},
            "replicates": self.replicates,
            "base_seed": self.base_seed,
            "level": {"rule": self.level_rule, "value": self.level_value},
            "k_n": {"rule": self.kn_rule, "value": self.kn_value},
            "engine": self.engine,
            "chain": asdict(self.chain),
            "output_dir": self.output_dir,
            "fixed_theta0": self.fixed_theta0,
            "construction": self.construction,
            "bounds": {"C": self.C, "delta": self.delta, "A": self.A},
            "rng": self.rng,
            "cap": self.cap,
        }

    def hash(self):
        d = self.to_dict()
        d.pop("output_dir")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


def load_config(path):
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return ExperimentConfig.from_dict(data)


@dataclass(frozen=True)
class ResultRow:
    task: str
    n: int
    p: float
    q: float
    replicate: int
    seed: int
    statistic: str
    value: float
    bound: float = math.nan
    vacuous: bool = False
    wall_time: float = 0.0


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list
    aggregates: list
    skipped: list
    files: list = field(default_factory=list)

    def values(self, statistic, n=None, p=None, q=None):
        return np.array([
            r.value for r in self.rows
            if r.statistic == statistic
            and (n is None or r.n == n) and (p is None or r.p == p) and (q is None or r.q == q)
        ])

    def aggregate(self, statistic, n=None, p=None, q=None):
        for a in self.aggregates:
            if a["statistic"] == statistic and (n is None or a["n"] == n) \
                    and (p is None or a["p"] == p) and (q is None or a["q"] == q):
                return a
        raise KeyError(statistic)


# ---------------------------------------------------------------------------
# per-replicate work
# ---------------------------------------------------------------------------


def _posterior_table(cfg, graph, params, seed):
    if cfg.engine == "exact":
        return exact_posterior(graph, params, cfg.cap)
    chain = replace(cfg.chain, seed=seed * cfg.chain.chains, rng=cfg.rng)
    return mh_sampler(graph, params, chain).to_table()


def _map_of(table):
    row = table.bits[int(np.argmax(table.log_weights))]
    return ClassAssignment(table.n, tuple(row.tolist()))


def _mass_at(table, theta):
    lw = table.log_weight(theta)
    return math.exp(lw) if lw > -math.inf else 0.0


def _recovery_stats(cfg, n, params, theta0, graph, table, seed):
    off = posterior_mass(table, k_distances(table.bits, theta0) > 0)
    bound = recovery_mass_bound(n, params.p, params.q)
    return [
        ("post_mass_theta0", _mass_at(table, theta0), math.nan, False),
        ("map_is_truth", float(_map_of(table) == theta0), math.nan, False),
        ("off_mass", off, bound, bound >= 1.0),
    ]


def _detection_stats(cfg, n, params, theta0, graph, table, seed):
    k_n = cfg.k_n(n)
    far = posterior_mass(table, k_distances(table.bits, theta0) >= k_n)
    if k_n >= 1:
        bound = detect_mass_bound(n, k_n, params.p, params.q)
        vac = bound >= 1.0
    else:
        bound, vac = math.nan, True
    theta_map = _map_of(table)
    return [
        ("far_mass", far, bound, vac),
        ("map_overlap", overlap(theta_map, theta0), math.nan, False),
        ("map_is_truth", float(theta_map == theta0), math.nan, False),
    ]


def _coverage_stats(cfg, n, params, theta0, graph, table, seed):
    a_n = cfg.credible_deficit(n)
    level = max(1.0 - a_n, np.finfo(float).tiny)
    k_n = cfg.k_n(n)
    if cfg.construction == "minimal-order":
        cred = minimal_order_credible(table, level)
    else:
        cred = minimal_diameter_credible(table, level)
    universe = table.bits if table.approximate and num_assignments(n) > cfg.cap else None
    report = enlarge(cred, k_n, universe)
    cov = coverage_lower_bound(n, a_n)
    return [
        ("theta0_in_D", float(theta0 in cred), cov.value, cov.vacuous),
        ("theta0_in_C", float(theta0 in report), cov.value, cov.vacuous),
        ("diam_D", float(cred.diameter), math.nan, False),
        ("diam_C", float(report.diameter), float(cred.diameter + 2 * k_n), False),
        ("size_D", float(len(cred)), math.nan, False),
        ("size_C", float(report.member_count), math.nan, False),
        ("level_achieved", cred.level_achieved, level, False),
    ]


def _dump_stats(cfg, n, params, theta0, graph, table, seed):
    return [
        ("log_evidence", table.log_evidence, math.nan, False),
        ("post_mass_theta0", _mass_at(table, theta0), math.nan, False),
    ]


_STATS = {
    "recovery": _recovery_stats,
    "detection": _detection_stats,
    "coverage": _coverage_stats,
    "posterior-dump": _dump_stats,
}


def _cell_name(n, p, q):
    return f"n{n}_p{format_float(p)}_q{format_float(q)}"


def _run_replicates(cfg, out_dir):
    rows, skipped, files = [], [], []
    stats_fn = _STATS[cfg.task]
    for n, p, q in cfg.cells():
        if cfg.engine == "exact" and num_assignments(n) > cfg.cap:
            skipped.append({"n": n, "p": p, "q": q,
                            "reason": f"|Theta_n| = {num_assignments(n)} exceeds cap {cfg.cap}"})
            continue
        if cfg.task == "detection" and n < 2:
            skipped.append({"n": n, "p": p, "q": q, "reason": "detection needs n >= 2"})
            continue
        params = ModelParams(n, p, q)
        for r in range(cfg.replicates):
            t0 = time.perf_counter()
            seed = cfg.base_seed + r
            theta0 = cfg.theta0(n, seed)
            graph = sample_graph(params, theta0, seed, cfg.rng)
            table = _posterior_table(cfg, graph, params, seed)
            stats = stats_fn(cfg, n, params, theta0, graph, table, seed)
            if cfg.task == "posterior-dump" and out_dir is not None:
                name = f"posterior_{_cell_name(n, p, q)}_r{r}.csv"
                write_posterior_csv(table, out_dir / name)
                files.append(name)
            wall = time.perf_counter() - t0
            for stat, value, bound, vac in stats:
                rows.append(ResultRow(cfg.task, n, p, q, r, seed, stat, float(value),
                                      float(bound), bool(vac), wall))
    return rows, skipped, files


def _bound_rows(cfg):
    rows = []
    for n, p, q in cfg.cells():
        k_n = max(1, cfg.k_n(n))
        if n < 2:
            continue
        rep = bound_report(n, p, q, k_n=k_n, C=cfg.C, delta=cfg.delta, A=cfg.A)
        flags = {
            "recovery_mass_bound": rep["recovery_vacuous"],
            "detect_mass_bound": rep["detect_vacuous"],
            "minimax.confidence_deficit_bound": rep["minimax"]["confidence_vacuous"],
        }
        for name, value in _flatten(rep):
            if name in ("n", "p", "q") or isinstance(value, bool) or value is None:
                continue
            rows.append(ResultRow(cfg.task, n, p, q, 0, cfg.base_seed, name, float(value),
                                  math.nan, bool(flags.get(name, False)), 0.0))
    return rows


def _flatten(d, prefix=""):
    for key, value in d.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            yield from _flatten(value, name + ".")
        else:
            yield name, value


def aggregate_rows(rows):
    groups = defaultdict(list)
    for r in rows:
        groups[(r.task, r.n, r.p, r.q, r.statistic)].append(r)
    out = []
    for key in sorted(groups):
        grp = groups[key]
        vals = np.array([r.value for r in grp])
        count = vals.size
        mean = float(vals.mean())
        stderr = float(vals.std(ddof=1) / math.sqrt(count)) if count > 1 else math.nan
        if key[4] in _INDICATORS:
            lo, hi = binomial_interval(int(round(vals.sum())), count)
        else:
            lo = hi = math.nan
        out.append({
            "task": key[0], "n": key[1], "p": key[2], "q": key[3], "statistic": key[4],
            "count": count, "mean": mean, "stderr": stderr, "ci_low": lo, "ci_high": hi,
            "bound": grp[0].bound, "vacuous": grp[0].vacuous,
        })
    return out


def _cell_extras(cfg):
    """Regime indicators per cell, as aggregate-style records."""
    out = []
    for n, p, q in cfg.cells():
        for name, value in regime_indicators(n, p, q).items():
            out.append({"task": cfg.task, "n": n, "p": p, "q": q, "statistic": name,
                        "count": 1, "mean": value, "stderr": math.nan, "ci_low": math.nan,
                        "ci_high": math.nan, "bound": math.nan, "vacuous": False})
    return out


def _fmt(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return format_float(v)
    return str(v)


def _write_csv(path, fields, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for rec in records:
            w.writerow([_fmt(rec[f]) for f in fields])


def _row_order(rows):
    stat_rank = {}
    for r in rows:
        stat_rank.setdefault(r.statistic, len(stat_rank))
    return sorted(rows, key=lambda r: (r.n, r.p, r.q, r.replicate, stat_rank[r.statistic]))


def run_experiment(cfg, output_dir=None):
    """Run ``cfg`` and, if an output directory is set, write ``rows.csv``,
    ``aggregates.csv`` and ``manifest.json`` there."""
    out = output_dir if output_dir is not None else cfg.output_dir
    out_dir = Path(out) if out is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    if cfg.task == "bound-check":
        rows, skipped, files = _bound_rows(cfg), [], []
    else:
        rows, skipped, files = _run_replicates(cfg, out_dir)
    rows = _row_order(rows)
    aggregates = aggregate_rows(rows)
    if cfg.task == "coverage":
        aggregates += _cell_extras(cfg)
    result = ExperimentResult(cfg, rows, aggregates, skipped, files)
    if out_dir is not None:
        _write_csv(out_dir / "rows.csv", ROW_FIELDS, [asdict(r) for r in rows])
        _write_csv(out_dir / "aggregates.csv", AGG_FIELDS, aggregates)
        result.files = ["rows.csv", "aggregates.csv", *files]
        manifest = {
            "config": cfg.to_dict(),
            "config_sha256": cfg.hash(),
            "base_seed": cfg.base_seed,
            "code_version": __version__,
            "seed_rule": __doc__.strip().split("\n\n", 1)[1].replace("\n", " "),
            "files": result.files,
            "skipped": skipped,
        }
        (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return result


def _run_task(task, cfg, output_dir=None):
    if cfg.task != task:
        cfg = replace(cfg, task=task)
    return run_experiment(cfg, output_dir)


def run_recovery_experiment(cfg, output_dir=None):
    """Posterior mass at the truth, MAP recovery and off-truth mass vs. its bound."""
    return _run_task("recovery", cfg, output_dir)


def run_detection_experiment(cfg, output_dir=None):
    """Posterior mass at distance ``>= k_n`` and MAP overlap."""
    return _run_task("detection", cfg, output_dir)


def run_coverage_experiment(cfg, output_dir=None):
    """Frequentist coverage of credible sets and their ``k_n``-enlargements."""
    return _run_task("coverage", cfg, output_dir)


def run_bound_check(cfg, output_dir=None):
    return _run_task("bound-check", cfg, output_dir)

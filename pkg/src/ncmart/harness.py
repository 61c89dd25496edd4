"""
Seeded verification corpus and suite runners.

Instance ``i`` of a corpus is generated only from ``trial_seed(master_seed, i)``
so results are independent of evaluation order and worker count.  Runners
return plain row dictionaries in a fixed order; :mod:`ncmart.cli` writes them.
"""
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import inequalities as ineq
from .algebra import complex_gaussian, make_rng, matrix_to_dict
from .errors import ConfigError
from .filtration import TOWER_KINDS, random_tower
from .maximal import SolverOptions, doob_report
from .search import THEOREMS, Instance, local_ascent, p_sweep, random_sweep, trial_seed

REPORT_COLUMNS = ["name", "p", "dim", "n", "lhs", "rhs", "constant", "ratio", "slack", "seed"]
MAXIMAL_COLUMNS = REPORT_COLUMNS + ["dual_bound", "gap", "dual_slack", "iterations", "converged"]
SEARCH_COLUMNS = ["theorem", "p", "dim", "n", "seed", "trials", "ascent_steps", "best_ratio", "bound", "fraction"]

SLACK_TOL = 1e-8
GAP_TOL = 1e-7
VERIFY_THEOREMS = ("dd", "dd_down", "dd_up", "cor13a", "cor13b", "bg", "stein", "doob")
SEARCH_THEOREMS = tuple(THEOREMS)
MIN_P = 0.05


@dataclass
class CorpusInstance:
    index: int
    seed: int
    dim: int
    n: int
    kind: str
    tower: object
    xs: list            # strictly positive definite sequence
    x: np.ndarray       # general element
    zs: list            # general sequence


def corpus_instance(master_seed, index, dims=(2, 4, 8), ns=(2, 3, 4, 5, 6), kinds=TOWER_KINDS):
    seed = trial_seed(master_seed, index)
    rng = make_rng(seed)
    dim = int(dims[rng.integers(len(dims))])
    n = int(ns[rng.integers(len(ns))])
    kind, tower = random_tower(dim, n, rng, kinds=kinds)
    xs = []
    for _ in range(n):
        g = complex_gaussian(dim, rng)
        xs.append(g @ g.conj().T / dim)
    x = complex_gaussian(dim, rng) / math.sqrt(dim)
    zs = [complex_gaussian(dim, rng) / math.sqrt(dim) for _ in range(n)]
    return CorpusInstance(index, seed, dim, n, kind, tower, xs, x, zs)


def corpus(master_seed, count, dims=(2, 4, 8), ns=(2, 3, 4, 5, 6), kinds=TOWER_KINDS):
    return [corpus_instance(master_seed, i, dims, ns, kinds) for i in range(count)]


@dataclass
class SuiteConfig:
    suite: str
    dims: list = field(default_factory=lambda: [2, 4, 8])
    ns: list = field(default_factory=lambda: [2, 3, 4, 5, 6])
    p_grid: list = field(default_factory=list)
    trials: int = 100
    master_seed: int = 0
    tower_kinds: list = field(default_factory=lambda: list(TOWER_KINDS))
    output_path: str = "-"
    format: str = "csv"
    theorem: str = None
    workers: int = 1
    ascent_steps: int = 0
    barrier_mu0: float = 1.0
    gap_tol: float = 1e-5
    max_iters: int = 2000

    def validate(self):
        if self.suite not in ("verify", "trace", "maximal", "search", "sweep"):
            raise ConfigError(f"unknown suite {self.suite!r}")
        if not self.p_grid:
            raise ConfigError("p_grid must not be empty")
        bad = [p for p in self.p_grid if not p >= MIN_P]
        if bad:
            raise ConfigError(f"p values must be >= {MIN_P}: {bad}")
        if not self.dims or any(d < 1 for d in self.dims):
            raise ConfigError("dims must be a nonempty list of positive integers")
        if not self.ns or any(n < 1 for n in self.ns):
            raise ConfigError("ns must be a nonempty list of positive integers")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        unknown = [k for k in self.tower_kinds if k not in TOWER_KINDS]
        if unknown or not self.tower_kinds:
            raise ConfigError(f"tower kinds must be drawn from {TOWER_KINDS}, got {self.tower_kinds}")
        if self.suite == "verify":
            th = self.theorem or "dd"
            if th not in VERIFY_THEOREMS:
                raise ConfigError(f"verify theorem must be one of {VERIFY_THEOREMS}")
            if th == "dd":
                if any(p > 2 for p in self.p_grid):
                    raise ConfigError("dual Doob verification covers p <= 2")
            else:
                spec = THEOREMS[th]
                out = [p for p in self.p_grid if not spec.valid(p)]
                if out:
                    raise ConfigError(f"{th} is not claimed at p={out}")
        if self.suite == "trace" and any(p > 4 for p in self.p_grid):
            raise ConfigError("proof traces cover p <= 4")
        if self.suite == "maximal" and any(p < 2 for p in self.p_grid):
            raise ConfigError("maximal norms are covered for p >= 2")
        if self.suite in ("search", "sweep"):
            if self.theorem not in SEARCH_THEOREMS:
                raise ConfigError(f"--theorem is required, one of {SEARCH_THEOREMS}")
        if self.suite == "search":
            out = [p for p in self.p_grid if not THEOREMS[self.theorem].valid(p)]
            if out:
                raise ConfigError(f"{self.theorem} is not claimed at p={out}")
        return self


@dataclass
class SuiteResult:
    rows: list
    columns: list
    instances: int
    violations: list = field(default_factory=list)
    json_rows: list = None

    @property
    def min_slack(self):
        vals = [r["slack"] for r in self.rows if "slack" in r and not math.isnan(r["slack"])]
        return min(vals) if vals else math.nan

    @property
    def max_fraction(self):
        vals = []
        for r in self.rows:
            if "fraction" in r:
                vals.append(r["fraction"])
            elif "constant" in r and not math.isnan(r["constant"]) and r["constant"] > 0:
                vals.append(r["ratio"] / r["constant"])
        vals = [v for v in vals if not math.isnan(v)]
        return max(vals) if vals else math.nan


def _map(fn, items, workers):
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _report_row(rep, inst):
    return {"name": rep.name, "p": rep.p, "dim": inst.dim, "n": inst.n, "lhs": rep.lhs, "rhs": rep.rhs,
            "constant": rep.constant, "ratio": rep.ratio, "slack": rep.slack, "seed": inst.seed}


def _dump_instance(inst):
    return {"index": inst.index, "seed": inst.seed, "tower": inst.tower.to_list(),
            "xs": [matrix_to_dict(x) for x in inst.xs], "x": matrix_to_dict(inst.x),
            "zs": [matrix_to_dict(z) for z in inst.zs]}


def verify_reports(inst, p, theorem="dd"):
    """Reports checked by the ``verify`` suite for one instance and exponent."""
    if theorem == "dd":
        theorem = "dd_down" if p <= 1 else "dd_up"
    if theorem in ("dd_down", "dd_up"):
        down, up = ineq.dual_doob_report(inst.tower, inst.xs, p)
        return [down if theorem == "dd_down" else up]
    if theorem in ("cor13a", "cor13b"):
        a, b = ineq.cor13_report(inst.tower, inst.x, p)
        return [a if theorem == "cor13a" else b]
    if theorem == "bg":
        return [ineq.bg_report(inst.tower, inst.x, p)[0]]
    if theorem == "stein":
        return [ineq.stein_report(inst.tower, inst.zs, p)]
    if theorem == "doob":
        x = inst.xs[-1]
        return [doob_report(inst.tower, x, p)[0]]
    raise ValueError(theorem)


def trace_for(inst, p):
    if p <= 1:
        return ineq.proof_trace_thm11(inst.tower, inst.xs, p)
    if p <= 2:
        return ineq.proof_trace_thm12(inst.tower, inst.xs, p)
    return ineq.bg_report(inst.tower, inst.x, p)[1]


def run_verify(cfg):
    insts = corpus(cfg.master_seed, cfg.trials, cfg.dims, cfg.ns, cfg.tower_kinds)
    theorem = cfg.theorem or "dd"

    def work(inst):
        return [rep for p in cfg.p_grid for rep in verify_reports(inst, p, theorem)]

    rows, violations = [], []
    for inst, reps in zip(insts, _map(work, insts, cfg.workers)):
        for rep in reps:
            rows.append(_report_row(rep, inst))
            if not rep.holds(SLACK_TOL):
                violations.append({"report": rep.to_dict(), "instance": _dump_instance(inst)})
    return SuiteResult(rows, REPORT_COLUMNS, len(insts), violations)


def run_trace(cfg):
    insts = corpus(cfg.master_seed, cfg.trials, cfg.dims, cfg.ns, cfg.tower_kinds)

    def work(inst):
        return [trace_for(inst, p) for p in cfg.p_grid]

    rows, violations = [], []
    for inst, traces in zip(insts, _map(work, insts, cfg.workers)):
        for tr in traces:
            for st in tr.steps:
                rows.append({"name": f"{tr.name}:{st.label}", "p": tr.p, "dim": inst.dim, "n": inst.n,
                             "lhs": st.lhs, "rhs": st.rhs, "constant": 1.0,
                             "ratio": st.lhs / st.rhs if st.rhs != 0 else 0.0,
                             "slack": st.slack, "seed": inst.seed})
            if tr.asserted and not tr.holds(SLACK_TOL):
                violations.append({"trace": tr.to_dict(), "instance": _dump_instance(inst)})
    return SuiteResult(rows, REPORT_COLUMNS, len(insts), violations)


def run_maximal(cfg):
    insts = corpus(cfg.master_seed, cfg.trials, cfg.dims, cfg.ns, cfg.tower_kinds)
    opts = SolverOptions(mu0=cfg.barrier_mu0, gap_tol=cfg.gap_tol, max_iters=cfg.max_iters,
                         seed=cfg.master_seed)

    def work(inst):
        return [doob_report(inst.tower, inst.xs[-1], p, opts) for p in cfg.p_grid]

    rows, json_rows, violations = [], [], []
    for inst, outs in zip(insts, _map(work, insts, cfg.workers)):
        for rep, res in outs:
            row = _report_row(rep, inst)
            row.update({k: rep.params[k] for k in ("dual_bound", "gap", "dual_slack", "iterations", "converged")})
            rows.append(row)
            json_rows.append({**row, "witness": matrix_to_dict(res.witness)})
            if (not rep.holds(SLACK_TOL) or rep.params["dual_slack"] < -SLACK_TOL
                    or res.gap < -GAP_TOL):
                violations.append({"report": rep.to_dict(), "instance": _dump_instance(inst)})
    return SuiteResult(rows, MAXIMAL_COLUMNS, len(insts), violations, json_rows)


def _combos(cfg):
    return [(d, n, p) for d in cfg.dims for n in cfg.ns for p in cfg.p_grid]


def run_search(cfg):
    rows, json_rows = [], []
    combos = _combos(cfg)
    for d, n, p in combos:
        rec = random_sweep(cfg.theorem, p, d, n, cfg.trials, cfg.master_seed, workers=cfg.workers,
                           kinds=cfg.tower_kinds)
        if cfg.ascent_steps:
            start = Instance.from_dict(json.loads(rec.instance_digest))
            asc = local_ascent(start, cfg.ascent_steps, seed=cfg.master_seed)
            if asc.best_ratio > rec.best_ratio:
                rec.best_ratio, rec.fraction, rec.instance_digest = asc.best_ratio, asc.fraction, asc.instance_digest
            rec.ascent_steps = cfg.ascent_steps
        rows.append(rec.row())
        json_rows.append(_record_json(rec))
    return SuiteResult(rows, SEARCH_COLUMNS, len(combos) * cfg.trials, [], json_rows)


def run_sweep(cfg):
    rows, json_rows = [], []
    for d in cfg.dims:
        for n in cfg.ns:
            recs, _ = p_sweep(cfg.theorem, cfg.p_grid, d, n, cfg.trials, cfg.master_seed,
                              cfg.ascent_steps, cfg.workers)
            for rec in recs:
                rows.append(rec.row())
                json_rows.append(_record_json(rec))
    return SuiteResult(rows, SEARCH_COLUMNS, len(rows) * cfg.trials, [], json_rows)


def _record_json(rec):
    return {**rec.row(), "instance": json.loads(rec.instance_digest)}


RUNNERS = {"verify": run_verify, "trace": run_trace, "maximal": run_maximal,
           "search": run_search, "sweep": run_sweep}


def run_suite(cfg):
    cfg.validate()
    return RUNNERS[cfg.suite](cfg)

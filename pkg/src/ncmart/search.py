"""
Empirical probes of how close the inequality constants are to being attained.

An :class:`Instance` holds a tower and complex Gaussian factors ``G_k``; the
inputs of each inequality are derived from the factors (``G_k G_k*`` for
positive sequences, ``G_k`` itself for general elements), so every parameter
vector is admissible and no projection is needed.

Every evaluated ratio is checked against its bound; an excess beyond ``1e-8``
raises :class:`BoundViolation` after logging the instance at CRITICAL level.
"""
import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from . import inequalities as ineq
from ._fmt import dumps17, fmt_float
from .algebra import complex_gaussian, conjugate_exponent, make_rng, matrix_from_dict, matrix_to_dict, schatten
from .errors import BoundViolation, OutsideRange
from .filtration import TOWER_KINDS, SubalgebraSpec, preset_tower, random_tower, validate_tower
from .maximal import maximal_primal

log = logging.getLogger(__name__)

VIOLATION_TOL = 1e-8


@dataclass(frozen=True)
class TheoremSpec:
    name: str
    bound: object       # p -> constant
    lo: float
    hi: float
    lo_open: bool
    inputs: str         # "psd_seq" | "general_seq" | "general" | "psd"

    def valid(self, p):
        above = p > self.lo if self.lo_open else p >= self.lo - 1e-12
        return above and p <= self.hi + 1e-12


THEOREMS = {
    "dd_down": TheoremSpec("dd_down", lambda p: 1.0 / p, 0.0, 1.0, True, "psd_seq"),
    "dd_up": TheoremSpec("dd_up", lambda p: p, 1.0, 2.0, False, "psd_seq"),
    "cor13a": TheoremSpec("cor13a", lambda p: math.sqrt(2.0 / p), 0.0, 2.0, True, "general"),
    "cor13b": TheoremSpec("cor13b", lambda p: math.sqrt(p / 2.0), 2.0, 4.0, False, "general"),
    "bg": TheoremSpec("bg", ineq.bg_constant, 2.0, 4.0, True, "general"),
    "stein": TheoremSpec("stein", ineq.stein_constant, 4.0 / 3.0, 4.0, False, "general_seq"),
    "doob": TheoremSpec("doob", conjugate_exponent, 2.0, math.inf, False, "psd"),
    # conjectured constant p^2 for the upper bound beyond p = 2; exploration only
    "dd_up_p2": TheoremSpec("dd_up_p2", lambda p: p * p, 2.0, math.inf, True, "psd_seq"),
}


@dataclass
class Instance:
    theorem: str
    p: float
    tower: object
    factors: list

    @property
    def dim(self):
        return self.tower.dim

    @property
    def n(self):
        return len(self.tower)

    def inputs(self):
        kind = THEOREMS[self.theorem].inputs
        if kind == "psd_seq":
            return [g @ g.conj().T for g in self.factors]
        if kind == "general_seq":
            return list(self.factors)
        if kind == "psd":
            g = self.factors[0]
            return g @ g.conj().T
        return self.factors[0]

    def params(self):
        return np.concatenate([np.concatenate([g.real.ravel(), g.imag.ravel()]) for g in self.factors])

    def with_params(self, v):
        d = self.dim
        size = d * d
        factors = []
        for k in range(len(self.factors)):
            chunk = v[2 * size * k: 2 * size * (k + 1)]
            factors.append((chunk[:size] + 1j * chunk[size:]).reshape(d, d))
        return Instance(self.theorem, self.p, self.tower, factors)

    def to_dict(self):
        return {"theorem": self.theorem, "p": self.p, "tower": self.tower.to_list(),
                "factors": [matrix_to_dict(g) for g in self.factors]}

    def digest(self):
        return dumps17(self.to_dict())

    @classmethod
    def from_dict(cls, obj):
        return cls(obj["theorem"], float(obj["p"]), validate_tower(obj["tower"]),
                   [matrix_from_dict(g) for g in obj["factors"]])


@dataclass
class SearchRecord:
    theorem: str
    p: float
    dim: int
    n: int
    seed: int
    best_ratio: float
    bound: float
    fraction: float
    instance_digest: str
    trials: int = 0
    ascent_steps: int = 0

    def row(self):
        return {"theorem": self.theorem, "p": self.p, "dim": self.dim, "n": self.n, "seed": self.seed,
                "trials": self.trials, "ascent_steps": self.ascent_steps,
                "best_ratio": self.best_ratio, "bound": self.bound, "fraction": self.fraction}


def theorem_spec(theorem, p):
    if theorem not in THEOREMS:
        raise ValueError(f"unknown theorem {theorem!r}; choose from {sorted(THEOREMS)}")
    spec = THEOREMS[theorem]
    if not spec.valid(p):
        raise OutsideRange(f"{theorem} is not claimed at p={p}")
    return spec


def evaluate(instance):
    """Ratio ``lhs / rhs`` of the instance's inequality."""
    th, p, tower = instance.theorem, instance.p, instance.tower
    x = instance.inputs()
    if th in ("dd_down", "dd_up", "dd_up_p2"):
        down, up = ineq.dual_doob_report(tower, x, p)
        return down.ratio if th == "dd_down" else up.ratio
    if th in ("cor13a", "cor13b"):
        a, b = ineq.cor13_report(tower, x, p)
        return a.ratio if th == "cor13a" else b.ratio
    if th == "bg":
        return ineq.bg_report(tower, x, p)[0].ratio
    if th == "stein":
        return ineq.stein_report(tower, x, p).ratio
    if th == "doob":
        # the dual value is a certified lower bound on the maximal norm
        xs = [tower.cond_exp(k, x) for k in range(len(tower))]
        res = maximal_primal(xs, p, n_random_duals=0)
        rhs = schatten(x, p)
        return res.dual_bound / rhs if rhs > 0 else 0.0
    raise ValueError(th)


def _checked(instance, ratio, bound):
    if ratio > bound + VIOLATION_TOL:
        dump = instance.digest()
        log.critical("bound violated: %s ratio %.17g > bound %.17g; instance %s",
                     instance.theorem, ratio, bound, dump)
        raise BoundViolation(f"{instance.theorem} at p={instance.p}: ratio {ratio!r} exceeds {bound!r}",
                             instance=dump)
    return ratio


def trial_seed(master_seed, index):
    """Per-trial 64-bit seed derived from ``(master_seed, index)``."""
    ss = np.random.SeedSequence(entropy=int(master_seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def random_instance(theorem, p, dim, n, seed, kinds=TOWER_KINDS):
    rng = make_rng(seed)
    _, tower = random_tower(dim, n, rng, kinds=kinds)
    count = 1 if THEOREMS[theorem].inputs in ("general", "psd") else n
    factors = [complex_gaussian(dim, rng) / math.sqrt(dim) for _ in range(count)]
    return Instance(theorem, p, tower, factors)


def canonical_instance(theorem, p, dim=2, n=2):
    """Classical point-mass instance: the trivial algebra followed by the
    diagonal algebra, ``x_1 = e_0 e_0*`` and ``x_2 = 1 - e_0 e_0*``.  At
    ``dim = 2`` this is ``x_1 = diag(1, 0)``, ``x_2 = diag(0, 1)`` on the
    two-step dyadic tower.  Only defined for positive-sequence theorems."""
    if THEOREMS[theorem].inputs != "psd_seq" or n < 2:
        return None
    specs = [SubalgebraSpec.trivial(dim)] + [SubalgebraSpec.diagonal(dim)] * (n - 1)
    tower = preset_tower("custom", dim, specs=specs)
    factors = [np.zeros((dim, dim), dtype=complex) for _ in range(n)]
    factors[0][0, 0] = 1.0
    factors[1] = np.diag([0.0] + [1.0] * (dim - 1)).astype(complex)
    return Instance(theorem, p, tower, factors)


def _best(results):
    best_i = max(range(len(results)), key=lambda i: (results[i][0], -i))
    return results[best_i]


def random_sweep(theorem, p, dim, n, trials, master_seed, include_canonical=True,
                 workers=1, kinds=TOWER_KINDS):
    """Maximize the ratio over ``trials`` independent random instances.

    Trial ``i`` is generated from ``trial_seed(master_seed, i)``, so the result
    does not depend on ``workers``.  With ``include_canonical`` the
    point-mass instance is evaluated as well (positive-sequence theorems).
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    spec = theorem_spec(theorem, p)
    bound = spec.bound(p)

    def run(i):
        inst = random_instance(theorem, p, dim, n, trial_seed(master_seed, i), kinds)
        return _checked(inst, evaluate(inst), bound), inst

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, range(trials)))
    else:
        results = [run(i) for i in range(trials)]
    if include_canonical:
        inst = canonical_instance(theorem, p, dim, n)
        if inst is not None:
            results.append((_checked(inst, evaluate(inst), bound), inst))
    ratio, inst = _best(results)
    return SearchRecord(theorem, p, dim, n, int(master_seed), ratio, bound, ratio / bound,
                        inst.digest(), trials=trials)


def local_ascent(instance, steps=500, seed=0, restart_tol=1e-10):
    """Nelder-Mead ascent of the log-ratio over the real parameters of the
    Gaussian factors.  The simplex is restarted around the incumbent whenever
    it collapses before the evaluation budget ``steps`` is spent.  The
    returned ratio is never below the starting ratio.
    """
    spec = theorem_spec(instance.theorem, instance.p)
    bound = spec.bound(instance.p)
    start = _checked(instance, evaluate(instance), bound)
    best = {"ratio": start, "inst": instance}

    def objective(v):
        cand = instance.with_params(v)
        try:
            r = evaluate(cand)
        except (ValueError, np.linalg.LinAlgError):
            return math.inf
        if not (r > 0 and math.isfinite(r)):
            return math.inf
        _checked(cand, r, bound)
        if r > best["ratio"]:
            best["ratio"], best["inst"] = r, cand
        return -math.log(r)

    rng = make_rng(seed)
    x0 = instance.params()
    used = 0
    while used < steps:
        budget = steps - used
        scale = 0.1 * max(1.0, float(np.max(np.abs(x0))))
        simplex = np.vstack([x0, x0 + scale * rng.standard_normal((x0.size, x0.size))])
        res = minimize(objective, x0, method="Nelder-Mead",
                       options={"maxfev": budget, "initial_simplex": simplex,
                                "xatol": restart_tol, "fatol": restart_tol})
        used += max(int(res.nfev), 1)
        x0 = best["inst"].params()
        if res.nfev >= budget:
            break

    inst = best["inst"]
    return SearchRecord(inst.theorem, inst.p, inst.dim, inst.n, int(seed), best["ratio"], bound,
                        best["ratio"] / bound, inst.digest(), ascent_steps=steps)


def p_sweep(theorem, p_grid, dim=2, n=2, trials=50, master_seed=0, ascent_steps=0, workers=1,
            include_canonical=True):
    """One :class:`SearchRecord` per admissible grid point.

    Points outside the theorem's range are skipped with a warning; the list of
    skipped points is returned alongside the records.
    """
    records, skipped = [], []
    for p in p_grid:
        if not THEOREMS[theorem].valid(p):
            log.warning("%s: p=%s outside the claimed range, skipped", theorem, p)
            skipped.append(p)
            continue
        rec = random_sweep(theorem, p, dim, n, trials, master_seed, include_canonical, workers)
        if ascent_steps:
            start = Instance.from_dict(json.loads(rec.instance_digest))
            asc = local_ascent(start, ascent_steps, seed=master_seed)
            if asc.best_ratio > rec.best_ratio:
                rec.best_ratio, rec.fraction, rec.instance_digest = asc.best_ratio, asc.fraction, asc.instance_digest
            rec.ascent_steps = ascent_steps
        records.append(rec)
    return records, skipped


# -- regression baselines ------------------------------------------------------

BASELINE_COLUMNS = ["theorem", "p", "dim", "n", "master_seed", "trials", "ascent_steps",
                    "sweep_ratio", "best_ratio"]

BASELINE_CONFIGS = (
    [("dd_down", p, 2, 2, 0, 200, 0) for p in (0.25, 0.5, 0.75)]
    + [("dd_down", 0.5, 8, 4, 0, 200, 0), ("dd_up", 1.5, 2, 2, 0, 200, 0), ("dd_up", 2.0, 4, 3, 0, 200, 0),
       ("cor13a", 1.0, 4, 3, 0, 100, 0), ("cor13b", 3.0, 4, 3, 0, 100, 0), ("bg", 3.0, 4, 3, 0, 100, 0),
       ("stein", 2.0, 4, 3, 0, 100, 0), ("doob", 2.0, 2, 3, 0, 10, 0)]
    + [("dd_down", 0.5, 4, 2, seed, 20, 2000) for seed in range(6)]
)


def baseline_row(theorem, p, dim, n, master_seed, trials, ascent_steps):
    rec = random_sweep(theorem, p, dim, n, trials, master_seed)
    best = rec.best_ratio
    if ascent_steps:
        start = Instance.from_dict(json.loads(rec.instance_digest))
        best = local_ascent(start, ascent_steps, seed=master_seed).best_ratio
    return {"theorem": theorem, "p": p, "dim": dim, "n": n, "master_seed": master_seed, "trials": trials,
            "ascent_steps": ascent_steps, "sweep_ratio": rec.best_ratio, "best_ratio": best}


def write_baselines(path, configs=BASELINE_CONFIGS):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BASELINE_COLUMNS)
        for cfg in configs:
            row = baseline_row(*cfg)
            w.writerow([fmt_float(v) if isinstance(v, float) else v for v in (row[c] for c in BASELINE_COLUMNS)])


def read_baselines(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for r in rows:
        out.append({"theorem": r["theorem"], "p": float(r["p"]), "dim": int(r["dim"]), "n": int(r["n"]),
                    "master_seed": int(r["master_seed"]), "trials": int(r["trials"]),
                    "ascent_steps": int(r["ascent_steps"]), "sweep_ratio": float(r["sweep_ratio"]),
                    "best_ratio": float(r["best_ratio"])})
    return out

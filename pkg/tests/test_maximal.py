import math

import numpy as np
import pytest

from ncmart.algebra import complex_gaussian, eigvalsh, make_rng, mpow, random_psd, schatten
from ncmart.errors import ConvergenceFailure
from ncmart.filtration import SubalgebraSpec, random_tower, validate_tower
from ncmart.maximal import (
    SolverOptions,
    default_candidates,
    doob_report,
    dual_values,
    maximal_dual_bound,
    maximal_primal,
)

X1 = np.diag([1.0, 0.0])
X2 = np.diag([0.0, 2.0])


def random_family(seed, d, n):
    rng = make_rng(seed)
    out = []
    for _ in range(n):
        g = complex_gaussian(d, rng)
        out.append(g @ g.conj().T / d)
    return out


def assert_feasible(res, xs):
    a = res.witness.entries
    assert min(float(eigvalsh(a - x)[0]) for x in xs) >= -1e-9


class TestPrimal:
    def test_single_element(self):
        x = random_psd(3, 4).entries
        res = maximal_primal([x], 2.0)
        assert res.value == pytest.approx(schatten(x, 2), abs=1e-12)
        np.testing.assert_allclose(res.witness.entries, x, atol=1e-12)
        assert res.gap <= 1e-9

    def test_zero(self):
        res = maximal_primal([np.zeros((2, 2))], 3.0)
        assert res.value == 0.0 and res.dual_bound == 0.0
        assert not res.witness.entries.any()

    def test_commuting_pair(self):
        res = maximal_primal([X1, X2], 2.0)
        assert res.value == pytest.approx(math.sqrt(2.5), abs=1e-6)
        assert res.converged
        assert_feasible(res, [X1, X2])

    @pytest.mark.parametrize("p", [2.0, 3.0, 4.0])
    def test_commuting_random(self, p):
        rng = make_rng(int(p))
        vs = [rng.random(4) for _ in range(3)]
        res = maximal_primal([np.diag(v) for v in vs], p)
        oracle = float(np.mean(np.max(vs, axis=0) ** p) ** (1 / p))
        assert res.value == pytest.approx(oracle, abs=1e-6)

    def test_commuting_in_rotated_basis(self):
        u = np.linalg.qr(complex_gaussian(3, make_rng(1)))[0]
        vs = [np.array([1.0, 0.2, 0.5]), np.array([0.3, 0.9, 0.5])]
        xs = [u @ np.diag(v) @ u.conj().T for v in vs]
        res = maximal_primal(xs, 2.0)
        assert res.value == pytest.approx(float(np.mean(np.max(vs, axis=0) ** 2) ** 0.5), abs=1e-6)

    @pytest.mark.parametrize("seed", range(4))
    def test_random_weak_duality_and_feasibility(self, seed):
        xs = random_family(seed, 4, 3)
        res = maximal_primal(xs, 3.0)
        assert res.converged and res.gap >= -1e-7 and res.gap <= 1e-4
        assert_feasible(res, xs)
        # the value cannot beat the largest single element
        assert res.value >= max(schatten(x, 3.0) for x in xs) - 1e-9

    def test_monotone_under_dominated_append(self):
        xs = random_family(7, 3, 2)
        res = maximal_primal(xs, 2.0)
        extra = res.witness.entries - 0.1 * np.eye(3)
        extra = mpow(extra, 1.0)  # clip to the positive part
        res2 = maximal_primal(xs + [extra * 0.5], 2.0)
        assert res2.value == pytest.approx(res.value, abs=1e-6)

    def test_infinity(self):
        xs = random_family(5, 3, 2)
        res = maximal_primal(xs, math.inf)
        assert res.value >= max(schatten(x, math.inf) for x in xs) - 1e-9
        assert res.gap >= -1e-7
        assert_feasible(res, xs)

    def test_rejects_small_p(self):
        with pytest.raises(ValueError):
            maximal_primal([X1, X2], 1.5)

    def test_strict_iteration_cap(self):
        xs = random_family(3, 4, 3)
        with pytest.raises(ConvergenceFailure) as err:
            maximal_primal(xs, 2.0, strict=True, max_iters=3)
        assert err.value.result.iterations == 3
        assert_feasible(err.value.result, xs)
        loose = maximal_primal(xs, 2.0, SolverOptions(max_iters=3))
        assert not loose.converged


class TestDual:
    def test_holder_candidate_single(self):
        x = random_psd(4, 9).entries
        for p in (2.0, 3.5):
            bound = maximal_dual_bound([x], p, ys=[mpow(x, p - 1)])
            assert bound == pytest.approx(schatten(x, p), abs=1e-9)

    def test_kkt_commuting(self):
        bound = maximal_dual_bound([X1, X2], 2.0, ys=[np.diag([1.0, 0.0]), np.diag([0.0, 2.0])])
        assert bound >= math.sqrt(2.5) - 1e-6

    def test_zero_candidate_skipped(self):
        z = np.zeros((2, 2))
        assert maximal_dual_bound([X1, X2], 2.0, ys=[z, z]) == 0.0
        bound = maximal_dual_bound([X1, X2], 2.0, candidates=[[z, z], [X1, z]])
        # Hölder pairing of x_1 with itself gives ||x_1||_2
        assert bound == pytest.approx(math.sqrt(0.5))

    def test_length_check(self):
        with pytest.raises(ValueError):
            maximal_dual_bound([X1, X2], 2.0, ys=[X1])

    @pytest.mark.parametrize("seed", range(3))
    def test_weak_duality(self, seed):
        xs = random_family(seed + 20, 3, 3)
        res = maximal_primal(xs, 2.5)
        vals = [v for v in dual_values(xs, 2.5, default_candidates(xs, 2.5, 64, seed)) if v is not None]
        assert max(vals) <= res.value + 1e-7


class TestDoob:
    def test_constants(self):
        tower = validate_tower([SubalgebraSpec.trivial(2), SubalgebraSpec.diagonal(2)])
        rep, _ = doob_report(tower, X2, 2.0)
        assert rep.constant == 2.0 and rep.holds()
        rep, res = doob_report(tower, X2, math.inf)
        assert rep.constant == 1.0
        assert res.value <= schatten(X2, math.inf) + 1e-9

    def test_scalar_dimension(self):
        tower = validate_tower([SubalgebraSpec.full(1)] * 3)
        rep, _ = doob_report(tower, np.array([[1.7]]), 3.0)
        assert rep.ratio == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("p", [2.0, 3.0, 4.0])
    def test_dual_values_bounded(self, p):
        rng = make_rng(int(10 * p))
        for _ in range(3):
            _, tower = random_tower(4, 3, rng)
            x = random_psd(4, int(rng.integers(1 << 30))).entries
            rep, res = doob_report(tower, x, p)
            xs = [tower.cond_exp(k, x) for k in range(len(tower))]
            bound = p / (p - 1) * schatten(x, p)
            kkt = res.info.get("kkt_candidate")
            vals = dual_values(xs, p, ([kkt] if kkt else []) + default_candidates(xs, p))
            assert max(v for v in vals if v is not None) <= bound + 1e-8
            assert rep.params["dual_slack"] >= -1e-8

"""
The maximal norm ``||(x_n)||_{L_p(M, l_inf)} = inf{||a||_p : a >= x_n for all n}``
for positive families, computed by a log-barrier interior-point method, and
certified from below through the dual formula

    sup { sum_n tau(x_n y_n) : y_n >= 0, ||sum_n y_n||_{p'} <= 1 }.

Only weak duality (dual <= primal) is relied upon for assertions.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    PositiveOperator,
    as_array,
    complex_gaussian,
    conjugate_exponent,
    eigvalsh,
    loewner_leq,
    make_rng,
    mpow,
    schatten,
)
from .errors import ConvergenceFailure
from .inequalities import make_report

log = logging.getLogger(__name__)

INF_SURROGATE = 64.0


@dataclass
class MaximalNormResult:
    value: float
    witness: PositiveOperator
    dual_bound: float
    gap: float
    iterations: int
    p: float
    converged: bool = True
    info: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SolverOptions:
    mu0: float = 1.0
    mu_min: float = 1e-8
    mu_factor: float = 0.5
    gap_tol: float = 1e-5
    max_iters: int = 2000
    newton_tol: float = 1e-12
    max_newton: int = 60
    n_random_duals: int = 32
    seed: int = 0


def _hermitian_basis(d):
    """Orthonormal basis of the real space of ``d x d`` Hermitian matrices
    under ``<h, g> = Re Tr(h g)``; shape ``(d*d, d, d)``."""
    basis = []
    r = 1.0 / math.sqrt(2.0)
    for i in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[i, i] = 1.0
        basis.append(e)
    for i in range(d):
        for j in range(i + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = e[j, i] = r
            basis.append(e)
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = -1j * r
            e[j, i] = 1j * r
            basis.append(e)
    return np.array(basis)


def _divided_differences(lam, fprime, fsecond):
    """Matrix of first divided differences of ``fprime`` at ``lam``."""
    li, lj = np.meshgrid(lam, lam, indexing="ij")
    diff = li - lj
    close = np.abs(diff) <= 1e-9 * (1.0 + np.abs(li))
    with np.errstate(divide="ignore", invalid="ignore"):
        gam = (fprime(li) - fprime(lj)) / diff
    mid = (li + lj) / 2.0
    gam[close] = fsecond(mid[close])
    return gam


def _dual_value(xs, ys, p_conj):
    s = sum(ys)
    nrm = schatten(s, p_conj)
    if not nrm > 0 or not math.isfinite(nrm):
        return None
    d = s.shape[0]
    return sum(float(np.real(np.sum(x.T * y))) for x, y in zip(xs, ys)) / d / nrm


def _holder_candidates(xs, p):
    """One candidate per element: ``y = x_m^{p-1}`` in slot ``m`` (zero
    elsewhere), which attains ``||x_m||_p``."""
    out = []
    for m, x in enumerate(xs):
        y = mpow(x, p - 1.0) if math.isfinite(p) else _top_projection(x)
        ys = [np.zeros_like(x) for _ in xs]
        ys[m] = y
        out.append(ys)
    return out


def _top_projection(x):
    w, v = np.linalg.eigh(x)
    return np.outer(v[:, -1], v[:, -1].conj())


def _random_candidates(xs, count, seed):
    rng = make_rng(seed)
    d = xs[0].shape[0]
    out = []
    for _ in range(count):
        ys = []
        for _x in xs:
            g = complex_gaussian(d, rng)
            ys.append(g @ g.conj().T * rng.random())
        out.append(ys)
    return out


def dual_values(xs, p, candidates):
    """Normalized dual value of every candidate tuple (None where the tuple
    cannot be normalized)."""
    xs = [as_array(x) for x in xs]
    p_conj = conjugate_exponent(p)
    return [_dual_value(xs, [as_array(y) for y in ys], p_conj) for ys in candidates]


def default_candidates(xs, p, n_random=32, seed=0):
    xs = [as_array(x) for x in xs]
    return _holder_candidates(xs, p) + _random_candidates(xs, n_random, seed)


def maximal_dual_bound(xs, p, ys=None, candidates=None, n_random=32, seed=0):
    """Best dual value over feasible candidate tuples.

    Each tuple ``(y_n)`` of positive matrices is rescaled so that
    ``||sum y_n||_{p'} = 1``; tuples that cannot be normalized (all zero) are
    skipped.  When neither ``ys`` nor ``candidates`` is given, Hölder
    candidates for each element plus ``n_random`` random tuples are used.
    The result is always a lower bound for the maximal norm.
    """
    xs = [as_array(x) for x in xs]
    p_conj = conjugate_exponent(p)
    if ys is not None:
        pool = [list(ys)]
    elif candidates is not None:
        pool = [list(c) for c in candidates]
    else:
        pool = _holder_candidates(xs, p) + _random_candidates(xs, n_random, seed)
    best = 0.0
    for ys_ in pool:
        ys_ = [as_array(y) for y in ys_]
        if len(ys_) != len(xs):
            raise ValueError("candidate tuple length differs from the family length")
        v = _dual_value(xs, ys_, p_conj)
        if v is not None and v > best:
            best = v
    return best


def _dominating_index(xs, tol=1e-12):
    for m, x in enumerate(xs):
        if all(loewner_leq(y, x, tol)[0] for y in xs):
            return m
    return None


class _BarrierProblem:
    """``F(a) = Tr(a^q) - mu * sum_n log det(a - x_n)`` over Hermitian ``a``."""

    def __init__(self, xs, q):
        self.xs = xs
        self.q = q
        self.d = xs[0].shape[0]
        self.basis = _hermitian_basis(self.d)
        self.bflat = self.basis.reshape(len(self.basis), -1)

    def to_vec(self, h):
        return np.real(self.bflat.conj() @ h.reshape(-1))

    def from_vec(self, v):
        return np.tensordot(v, self.basis, axes=1)

    def slacks(self, a):
        """Inverses of ``a - x_n`` and their log-determinants, or None if
        some slack is not positive definite."""
        invs, logdet = [], 0.0
        for x in self.xs:
            s = a - x
            try:
                c = np.linalg.cholesky(s)
            except np.linalg.LinAlgError:
                return None
            logdet += 2.0 * float(np.sum(np.log(np.real(np.diag(c)))))
            ci = np.linalg.inv(c)
            invs.append(ci.conj().T @ ci)
        return invs, logdet

    def value(self, a, mu):
        sl = self.slacks(a)
        if sl is None:
            return math.inf
        w = np.clip(eigvalsh(a), 0.0, None)
        return float(np.sum(w ** self.q)) - mu * sl[1]

    def newton_step(self, a, mu):
        q = self.q
        invs, logdet = self.slacks(a)
        lam, u = np.linalg.eigh(a)
        lam = np.clip(lam, 0.0, None)
        grad_obj = (u * (q * lam ** (q - 1.0))) @ u.conj().T
        grad = self.to_vec(grad_obj - mu * sum(invs))

        bt = np.einsum("ji,kjl,lm->kim", u.conj(), self.basis, u).reshape(len(self.basis), -1)
        gam = _divided_differences(
            lam, lambda t: q * t ** (q - 1.0), lambda t: q * (q - 1.0) * t ** (q - 2.0)
        ).reshape(-1)
        hess = np.real((bt.conj() * gam) @ bt.T)
        for c in invs:
            m = np.einsum("ij,kjl->kil", c, self.basis)
            # Re Tr(C B_k C B_l) = Re sum_ij (C B_k)_ij (C B_l)_ji
            mk = m.reshape(len(self.basis), -1)
            mt = np.transpose(m, (0, 2, 1)).reshape(len(self.basis), -1)
            hess += mu * np.real(mk @ mt.T)
        hess = (hess + hess.T) / 2.0
        try:
            step = -np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            step = -np.linalg.lstsq(hess, grad, rcond=None)[0]
        decrement = float(-grad @ step)
        return self.from_vec(step), decrement, invs


def maximal_primal(xs, p, options=None, strict=False, **kw):
    """Minimize ``||a||_p`` subject to ``a >= x_n`` for every ``n``.

    Parameters
    ----------
    xs : sequence of positive matrices
    p : float
        ``2 <= p <= inf``.  For ``p = inf`` the smooth surrogate
        ``Tr(a^64)`` is minimized and the operator norm of the witness is
        reported.
    options : SolverOptions, optional
        Keyword overrides (``mu0``, ``gap_tol``, ``max_iters``, ...) may also
        be passed directly.
    strict : bool
        Raise :class:`ConvergenceFailure` (carrying the result as
        ``exc.result``) instead of returning an unconverged result.

    Returns
    -------
    MaximalNormResult
        ``value`` is the exponent-``p`` norm of a certified feasible witness,
        ``dual_bound`` the best dual value found, ``gap = value - dual_bound``.
    """
    opts = options or SolverOptions()
    if kw:
        opts = SolverOptions(**{**opts.__dict__, **kw})
    if not p >= 2:
        raise ValueError(f"maximal norm solver covers 2 <= p <= inf, got {p}")
    xs = [as_array(x) for x in xs]
    xs = [(x + x.conj().T) / 2 for x in xs]
    d = xs[0].shape[0]
    q = INF_SURROGATE if math.isinf(p) else float(p)

    dom = _dominating_index(xs)
    if dom is not None:
        a = xs[dom]
        value = schatten(a, p)
        dual = maximal_dual_bound(xs, p, candidates=_holder_candidates(xs, p)) if value > 0 else 0.0
        return MaximalNormResult(value, PositiveOperator(a), dual, value - dual, 0, p,
                                 info={"method": "dominating element", "index": dom})

    scale = max(float(eigvalsh(x)[-1]) for x in xs)
    ys_scaled = [x / scale for x in xs]
    prob = _BarrierProblem(ys_scaled, q)
    a = 2.0 * np.eye(d, dtype=complex)
    mu = opts.mu0
    iters = 0
    capped = False
    while True:
        for _ in range(opts.max_newton):
            if iters >= opts.max_iters:
                capped = True
                break
            step, dec, _ = prob.newton_step(a, mu)
            iters += 1
            if dec / 2.0 <= opts.newton_tol:
                break
            f0 = prob.value(a, mu)
            t = 1.0
            while t > 1e-14:
                cand = a + t * step
                cand = (cand + cand.conj().T) / 2
                if prob.value(cand, mu) <= f0 - 0.25 * t * dec:
                    break
                t *= 0.5
            else:
                break
            a = cand
        if capped or mu <= opts.mu_min:
            break
        mu = max(mu * opts.mu_factor, opts.mu_min)

    invs, _ = prob.slacks(a)
    kkt = [mu * c for c in invs]
    witness = a * scale
    witness = (witness + witness.conj().T) / 2
    value = schatten(witness, p)
    pool = [kkt] + default_candidates(xs, p, opts.n_random_duals, opts.seed)
    dual = maximal_dual_bound(xs, p, candidates=pool)
    gap = value - dual
    converged = gap <= opts.gap_tol * max(1.0, value) and not capped
    res = MaximalNormResult(value, PositiveOperator(witness), dual, gap, iters, p, converged,
                            info={"method": "barrier", "mu_final": mu, "scale": scale,
                                  "min_slack_eig": min(float(eigvalsh(witness - x)[0]) for x in xs),
                                  "kkt_candidate": kkt})
    if not converged:
        log.warning("maximal norm solver stopped with gap %.3e after %d iterations", gap, iters)
        if strict:
            exc = ConvergenceFailure(f"gap {gap:.3e} after {iters} iterations")
            exc.result = res
            raise exc
    return res


def doob_report(tower, x, p, options=None, **kw):
    """Maximal norm of the martingale ``(E_n x)_n`` against ``||x||_p``.

    The constant is ``p' = p/(p-1)`` (1 at ``p = inf``).  Independently of the
    solver, ``params["dual_slack"] = p' ||x||_p - dual_bound`` must be
    nonnegative since each dual value is a valid lower bound.

    Returns ``(report, result)``.
    """
    x = as_array(x)
    xs = [tower.cond_exp(k, x) for k in range(len(tower))]
    res = maximal_primal(xs, p, options, **kw)
    const = conjugate_exponent(p)
    rhs = schatten(x, p)
    rep = make_report("doob", p, res.value, rhs, const, dim=tower.dim, n=len(tower),
                      dual_bound=res.dual_bound, gap=res.gap, iterations=res.iterations,
                      converged=res.converged, dual_slack=const * rhs - res.dual_bound)
    return rep, res

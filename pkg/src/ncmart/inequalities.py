"""
Both sides of the dual Doob inequalities, their corollaries and the lemmas
behind them, reported as ratios and slacks, together with step-by-step traces
of the proofs.

Conventions
-----------
* ``ratio = lhs / rhs`` with ``0 / 0 -> 0`` (flagged in ``params``).
* ``slack = constant * rhs - lhs``; a verified instance has ``slack >= -tol``.
* Towers are zero-indexed; the martingale difference at step ``k`` uses
  ``E_{-1} := 0`` so the first square-function term is ``|E_0(x)|^2``.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import abs_sq, adjoint, as_array, eigvalsh, loewner_leq, mpow, msqrt, schatten, spectral_norm, tau
from .errors import LengthMismatch, OrderViolation, OutsideRange, SingularChain

NO_BOUND = "no bound claimed"


@dataclass
class IneqReport:
    name: str
    p: float
    lhs: float
    rhs: float
    constant: float
    ratio: float
    slack: float
    params: dict = field(default_factory=dict)

    @property
    def claimed(self):
        return not math.isnan(self.constant)

    def holds(self, tol=1e-8):
        """Slack check relative to ``1 + rhs``; vacuous when no bound is claimed."""
        return not self.claimed or self.slack >= -tol * (1.0 + abs(self.rhs))

    @property
    def fraction(self):
        return self.ratio / self.constant if self.claimed else math.nan

    def to_dict(self):
        return {
            "name": self.name, "p": self.p, "lhs": self.lhs, "rhs": self.rhs,
            "constant": self.constant, "ratio": self.ratio, "slack": self.slack,
            "params": dict(self.params),
        }


def make_report(name, p, lhs, rhs, constant, **params):
    lhs, rhs = float(lhs), float(rhs)
    if rhs == 0.0:
        if lhs > 0.0:
            raise ValueError(f"{name}: right-hand side vanishes while lhs={lhs}")
        ratio = 0.0
        params["zero_over_zero"] = True
    else:
        ratio = lhs / rhs
    if constant is None or math.isnan(constant):
        constant = math.nan
        slack = math.nan
        params.setdefault("note", NO_BOUND)
    else:
        slack = constant * rhs - lhs
    return IneqReport(name, float(p), lhs, rhs, float(constant), ratio, slack, params)


@dataclass(frozen=True)
class Step:
    label: str
    lhs: float
    rhs: float
    slack: float
    anchor: str


@dataclass
class StepTrace:
    """Chain of intermediate inequalities ``lhs <= rhs`` from one proof.

    ``asserted`` is False when the exponent lies outside the range in which
    the chain is a valid argument; the numbers are still recorded.
    """

    name: str
    p: float
    steps: list = field(default_factory=list)
    asserted: bool = True
    params: dict = field(default_factory=dict)

    def add(self, label, lhs, rhs, anchor):
        lhs, rhs = float(lhs), float(rhs)
        self.steps.append(Step(label, lhs, rhs, rhs - lhs, anchor))

    @property
    def min_slack(self):
        return min(s.slack for s in self.steps)

    def holds(self, tol=1e-8):
        return all(s.slack >= -tol * (1.0 + abs(s.rhs)) for s in self.steps)

    def to_dict(self):
        return {
            "name": self.name, "p": self.p, "asserted": self.asserted,
            "steps": [s.__dict__.copy() for s in self.steps],
            "params": dict(self.params),
        }


# -- shared pieces ---------------------------------------------------------------

def _check_lengths(tower, xs):
    if len(tower) != len(xs):
        raise LengthMismatch(f"tower has {len(tower)} steps, sequence has {len(xs)}")


def partial_sums(tower, xs):
    """``A_k = sum_{j<=k} x_j`` and ``B_k = sum_{j<=k} E_j(x_j)`` for
    ``k = 0..n`` with ``A_0 = B_0 = 0`` prepended."""
    _check_lengths(tower, xs)
    d = tower.dim
    A = [np.zeros((d, d), dtype=complex)]
    B = [np.zeros((d, d), dtype=complex)]
    for k, x in enumerate(xs):
        x = as_array(x)
        A.append(A[-1] + x)
        B.append(B[-1] + tower.cond_exp(k, x))
    return A, B


def _regularization(B):
    """``eps`` added to the partial sums before negative powers; zero unless
    one of them is numerically singular."""
    top = max(spectral_norm(b) for b in B)
    eps = 1e-10 * (1.0 + top)
    if min(eigvalsh(b)[0] for b in B) > eps:
        return 0.0
    return eps


def _rtau(x, y):
    """``tau(x y)`` for Hermitian ``x, y`` (real part)."""
    return float(np.real(np.sum(np.asarray(x).T * np.asarray(y)))) / np.shape(x)[0]


# -- dual Doob -------------------------------------------------------------------

def dual_doob_report(tower, xs, p):
    """Both dual Doob inequalities for a positive sequence.

    Returns ``(down, up)``: ``down`` compares ``||sum x_k||_p`` with
    ``||sum E_k x_k||_p`` under constant ``1/p`` (claimed for ``0 < p <= 1``),
    ``up`` the reverse direction under constant ``p`` (claimed for
    ``1 <= p <= 2``).
    """
    A, B = partial_sums(tower, xs)
    na, nb = schatten(A[-1], p), schatten(B[-1], p)
    meta = {"dim": tower.dim, "n": len(tower)}
    down = make_report("dd_down", p, na, nb, 1.0 / p if 0 < p <= 1 else math.nan, **meta)
    up = make_report("dd_up", p, nb, na, p if 1 <= p <= 2 else math.nan, **meta)
    return down, up


def proof_trace_thm11(tower, xs, p):
    """Step-level check of the ``0 < p <= 1`` dual Doob argument.

    Steps (with ``A, B`` the partial sums of ``x_k`` and ``E_k x_k``):

    ``i``      ``||A_n||_p <= ||B_n||_p^{1-p} tau(A_n B_n^{p-1})``
    ``ii.a``   ``tau(A_n B_n^{p-1}) <= sum_k tau(x_k B_k^{p-1})``
    ``ii.b``   ``sum_k tau(x_k B_k^{p-1}) = sum_k tau((B_k - B_{k-1}) B_k^{p-1})``
    ``iii``    ``sum_k tau((B_k - B_{k-1}) B_k^{p-1}) <= ||B_n||_p^p / p``

    The theorem slack equals ``s_i + ||B_n||_p^{1-p} (s_ii.a + s_ii.b + s_iii)``;
    this identity is stored as ``params["composition_residual"]``.
    """
    if not 0 < p <= 1:
        raise OutsideRange(f"proof chain for the lower dual Doob bound needs 0 < p <= 1, got {p}")
    A, B = partial_sums(tower, xs)
    n = len(tower)
    eps = _regularization(B[1:])
    d = tower.dim
    Breg = [b + eps * np.eye(d) for b in B]
    try:
        powers = [None] + [mpow(Breg[k], p - 1.0) for k in range(1, n + 1)]
    except Exception as exc:  # SingularPower
        raise SingularChain(str(exc)) from exc

    norm_a = schatten(A[n], p)
    norm_b = schatten(Breg[n], p)
    w = norm_b ** (1.0 - p)
    t_ab = _rtau(A[n], powers[n])
    t_xb = sum(_rtau(as_array(xs[k - 1]), powers[k]) for k in range(1, n + 1))
    t_db = sum(_rtau(B[k] - B[k - 1], powers[k]) for k in range(1, n + 1))
    bound = norm_b ** p / p

    tr = StepTrace("thm11", p, params={"eps": eps, "dim": d, "n": n})
    tr.add("i", norm_a, w * t_ab, "holder-split")
    tr.add("ii.a", t_ab, t_xb, "telescoping-monotone")
    tr.add("ii.b", t_xb, t_db, "trace-duality")
    tr.add("iii", t_db, bound, "increment-bound")

    theorem_slack = schatten(B[n], p) / p - norm_a
    s = [st.slack for st in tr.steps]
    composed = s[0] + w * (s[1] + s[2] + s[3])
    tr.params["theorem_slack"] = theorem_slack
    tr.params["composition_residual"] = composed - theorem_slack
    return tr


def proof_trace_thm12(tower, xs, p):
    """Step-level check of the ``1 <= p <= 2`` dual Doob argument.

    ``b1``  ``tau(B_n^p) <= p sum_k tau((B_k - B_{k-1}) B_k^{p-1})``
    ``b2``  ``... = p sum_k tau(x_k B_k^{p-1})``
    ``c``   ``... <= p sum_k tau(x_k B_n^{p-1}) = p tau(A_n B_n^{p-1})``
    ``d``   ``... <= p ||A_n||_p ||B_n||_p^{p-1}``

    Step ``c`` relies on operator monotonicity of ``t^{p-1}``, so for
    ``p > 2`` the trace is returned with ``asserted=False``.
    """
    if p < 1:
        raise OutsideRange(f"proof chain for the upper dual Doob bound needs p >= 1, got {p}")
    A, B = partial_sums(tower, xs)
    n = len(tower)
    d = tower.dim
    powers = [None] + [mpow(B[k], p - 1.0) for k in range(1, n + 1)]
    norm_a = schatten(A[n], p)
    norm_b = schatten(B[n], p)

    t_bp = tau(mpow(B[n], p))
    t_inc = p * sum(_rtau(B[k] - B[k - 1], powers[k]) for k in range(1, n + 1))
    t_xk = p * sum(_rtau(as_array(xs[k - 1]), powers[k]) for k in range(1, n + 1))
    t_xn = p * _rtau(A[n], powers[n])
    holder = p * norm_a * norm_b ** (p - 1.0)

    tr = StepTrace("thm12", p, asserted=p <= 2, params={"dim": d, "n": n})
    if p > 2:
        tr.params["note"] = "OutsideProofRange: t^(p-1) is not operator monotone for p > 2"
    tr.add("b1", t_bp, t_inc, "increment-bound")
    tr.add("b2", t_inc, t_xk, "trace-duality")
    tr.add("c", t_xk, t_xn, "monotone-power")
    tr.add("d", t_xn, holder, "holder")

    theorem_slack = p * norm_a - norm_b
    composed = sum(st.slack for st in tr.steps) / norm_b ** (p - 1.0) if norm_b > 0 else 0.0
    tr.params["theorem_slack"] = theorem_slack
    tr.params["composition_residual"] = composed - theorem_slack
    return tr


# -- lemmas ----------------------------------------------------------------------

@dataclass
class LemmaSlacks:
    """Slacks of the three trace lemmas; ``None`` where not applicable, with
    the reason recorded in ``absent``."""

    p: float
    slack21: float = None
    slack22: float = None
    slack24: float = None
    absent: dict = field(default_factory=dict)
    tol: float = 0.0

    def values(self):
        return {k: v for k, v in (("slack21", self.slack21), ("slack22", self.slack22),
                                  ("slack24", self.slack24)) if v is not None}

    def holds(self):
        return all(v >= -self.tol for v in self.values().values())


def holder_split_slack(a, b, p):
    """``||b||_p^{1-p} tau(a b^{p-1}) - ||a||_p`` for strictly positive
    ``a, b`` and ``0 < p < 1``; no order between ``a`` and ``b`` is needed."""
    return schatten(b, p) ** (1 - p) * _rtau(a, mpow(b, p - 1)) - schatten(a, p)


def lemma_slacks(a, b, p, order_tol=1e-10):
    """Evaluate the Hölder-split, concave-increment and convex-increment
    lemmas for the pair ``(a, b)``.

    * ``slack21 = ||b||_p^{1-p} tau(a b^{p-1}) - ||a||_p``, needs ``0 < p < 1``
      and strictly positive ``a, b``;
    * ``slack22 = tau(b^p - a^p)/p - tau((b - a) b^{p-1})``, needs
      ``0 < p <= 1`` and ``a <= b``;
    * ``slack24 = p tau((b - a) b^{p-1}) - tau(b^p - a^p)``, needs ``p >= 1``
      and ``a <= b``.

    Raises :class:`OrderViolation` if ``a <= b`` fails while slack22 or
    slack24 would apply.
    """
    a, b = as_array(a), as_array(b)
    out = LemmaSlacks(p)
    out.tol = 1e-9 * (1.0 + spectral_norm(b) ** p)

    ordered, gap = loewner_leq(a, b, order_tol)
    if not ordered:
        raise OrderViolation(f"a <= b fails (min eigenvalue of b - a is {gap:.3e})")

    if 0 < p < 1:
        if eigvalsh(a)[0] > 0 and eigvalsh(b)[0] > 0:
            out.slack21 = holder_split_slack(a, b, p)
        else:
            out.absent["slack21"] = "a and b must be strictly positive"
    else:
        out.absent["slack21"] = "requires 0 < p < 1"

    bp = mpow(b, p)
    ap = mpow(a, p)
    if p <= 1:
        out.slack22 = tau(bp - ap) / p - _rtau(b - a, mpow(b, p - 1))
    else:
        out.absent["slack22"] = "requires 0 < p <= 1"
    if p >= 1:
        out.slack24 = p * _rtau(b - a, mpow(b, p - 1)) - tau(bp - ap)
    else:
        out.absent["slack24"] = "requires p >= 1"
    return out


# -- square functions --------------------------------------------------------------

@dataclass
class SquareFunctions:
    """Column and row square and conditioned square functions at horizon N,
    together with their squares."""

    S_c: np.ndarray
    s_c: np.ndarray
    S_r: np.ndarray
    s_r: np.ndarray
    S_c2: np.ndarray
    s_c2: np.ndarray
    S_r2: np.ndarray
    s_r2: np.ndarray
    N: int


def martingale(tower, x, N=None):
    """``[E_0 x, ..., E_{N-1} x]`` (zero-indexed)."""
    N = len(tower) if N is None else N
    if not 1 <= N <= len(tower):
        raise LengthMismatch(f"horizon {N} outside 1..{len(tower)}")
    x = as_array(x)
    return [tower.cond_exp(k, x) for k in range(N)]


def differences(tower, x, N=None):
    m = martingale(tower, x, N)
    return [m[0]] + [m[k] - m[k - 1] for k in range(1, len(m))]


def square_function_partials(tower, x, N=None, side="column"):
    """Partial sums ``S_{c,k}^2`` for ``k = 0..N`` (``S_{c,0} = 0``)."""
    dx = differences(tower, x, N)
    d = tower.dim
    out = [np.zeros((d, d), dtype=complex)]
    for y in dx:
        out.append(out[-1] + (abs_sq(y) if side == "column" else abs_sq(adjoint(y))))
    return out


def square_functions(tower, x, N=None):
    dx = differences(tower, x, N)
    N = len(dx)
    col = [abs_sq(y) for y in dx]
    row = [abs_sq(adjoint(y)) for y in dx]
    S_c2 = sum(col)
    S_r2 = sum(row)
    s_c2 = col[0] + sum((tower.cond_exp(k - 1, col[k]) for k in range(1, N)), np.zeros_like(col[0]))
    s_r2 = row[0] + sum((tower.cond_exp(k - 1, row[k]) for k in range(1, N)), np.zeros_like(row[0]))
    return SquareFunctions(msqrt(S_c2), msqrt(s_c2), msqrt(S_r2), msqrt(s_r2),
                           S_c2, s_c2, S_r2, s_r2, N)


def _sqrt_norm(square, p):
    """``||square^{1/2}||_p`` computed as ``||square||_{p/2}^{1/2}``."""
    return schatten(square, p / 2.0) ** 0.5


def cor13_report(tower, x, p, N=None, side="column"):
    """Square function versus conditioned square function.

    Returns ``(a, b)``: ``a`` bounds ``||S||_p`` by ``sqrt(2/p) ||s||_p``
    (claimed for ``0 < p <= 2``); ``b`` bounds ``||s||_p`` by
    ``sqrt(p/2) ||S||_p`` (claimed for ``2 <= p <= 4``).
    """
    sf = square_functions(tower, x, N)
    S2, s2 = (sf.S_c2, sf.s_c2) if side == "column" else (sf.S_r2, sf.s_r2)
    nS, ns = _sqrt_norm(S2, p), _sqrt_norm(s2, p)
    meta = {"dim": tower.dim, "n": len(tower), "N": sf.N, "side": side}
    a = make_report("cor13a", p, nS, ns, math.sqrt(2.0 / p) if 0 < p <= 2 else math.nan, **meta)
    b = make_report("cor13b", p, ns, nS, math.sqrt(p / 2.0) if 2 <= p <= 4 else math.nan, **meta)
    return a, b


def bg_constant(p):
    """``(2 p^2 / (p - 2))^{1/2}``."""
    return math.sqrt(2.0 * p * p / (p - 2.0))


def bg_report(tower, x, p, N=None):
    """Square function bound ``||S_{c,N}(x)||_p <= c_p ||x||_p`` for
    ``2 < p <= 4`` plus a trace of the supporting chain.

    Trace steps (``S_j = S_{c,j}``, ``D_j = S_j^{p-2} - S_{j-1}^{p-2}``,
    ``E_{-1} := 0``, ``q = p/(p-2)``):

    ``increment``      ``tau(S_N^p) <= p/2 sum_k tau((S_k^2 - S_{k-1}^2) S_k^{p-2})``
    ``telescoping``    equality with ``p/2 sum_j tau(E_j(S_N^2 - S_{j-1}^2) D_j)``
    ``domination``     min eigenvalue of ``2E_j|x|^2 + 2E_{j-1}|x|^2 - E_j(S_N^2 - S_{j-1}^2)``
    ``positivity``     min eigenvalue of ``D_j``
    ``combine``        ``... <= p tau(|x|^2 S_N^{p-2}) + p tau(|x|^2 sum_j E_{j-1} D_j)``
    ``holder``         ``tau(|x|^2 S_N^{p-2}) <= ||x||_p^2 ||S_N||_p^{p-2}``
    ``holder-dual``    ``tau(|x|^2 sum_j E_{j-1} D_j) <= ||x||_p^2 ||sum_j E_{j-1} D_j||_q``
    ``dual-doob``      ``||sum_j E_{j-1} D_j||_q <= q ||S_N||_p^{p-2}``

    The last step invokes the upper dual Doob bound at exponent ``q``, which is
    only covered for ``q <= 2`` i.e. ``p >= 4``; ``params["dual_doob_exponent_covered"]``
    records this.
    """
    if not 2 < p <= 4:
        raise OutsideRange(f"square function bound needs 2 < p <= 4, got {p}")
    x = as_array(x)
    S2 = square_function_partials(tower, x, N)
    N = len(S2) - 1
    lhs = _sqrt_norm(S2[N], p)
    rhs = schatten(x, p)
    report = make_report("bg", p, lhs, rhs, bg_constant(p), dim=tower.dim, n=len(tower), N=N)

    q = p / (p - 2.0)
    r = (p - 2.0) / 2.0
    Sp = [mpow(s, r) for s in S2]  # S_j^{p-2}
    D = [None] + [Sp[j] - Sp[j - 1] for j in range(1, N + 1)]
    x2 = abs_sq(x)

    def E(k, y):
        # zero-indexed tower: E_j in one-based notation is tower.cond_exp(j-1)
        return np.zeros_like(y) if k == 0 else tower.cond_exp(k - 1, y)

    t_sp = tau(mpow(S2[N], p / 2.0))
    t_inc = p / 2.0 * sum(_rtau(S2[k] - S2[k - 1], Sp[k]) for k in range(1, N + 1))
    t_tel = p / 2.0 * sum(_rtau(E(j, S2[N] - S2[j - 1]), D[j]) for j in range(1, N + 1))
    dom = min(eigvalsh(2 * E(j, x2) + 2 * E(j - 1, x2) - E(j, S2[N] - S2[j - 1]))[0]
              for j in range(1, N + 1))
    pos = min(eigvalsh(D[j])[0] for j in range(1, N + 1))
    cond_sum = sum((E(j - 1, D[j]) for j in range(1, N + 1)), np.zeros_like(x2))
    t_first = _rtau(x2, Sp[N])
    t_second = _rtau(x2, cond_sum)
    nx = schatten(x, p)
    nS = lhs
    q_norm = schatten(cond_sum, q)

    tr = StepTrace("bg", p, params={"dim": tower.dim, "N": N, "q": q,
                                    "dual_doob_exponent_covered": q <= 2.0})
    tr.add("increment", t_sp, t_inc, "increment-bound")
    tr.add("telescoping", t_inc, t_tel, "telescoping-identity")
    tr.add("domination", 0.0, dom, "difference-domination")
    tr.add("positivity", 0.0, pos, "power-monotone")
    tr.add("combine", t_tel, p * t_first + p * t_second, "combine")
    tr.add("holder", t_first, nx ** 2 * nS ** (p - 2.0), "holder")
    tr.add("holder-dual", t_second, nx ** 2 * q_norm, "holder")
    tr.add("dual-doob", q_norm, q * nS ** (p - 2.0), "dual-doob")
    return report, tr


def stein_constant(p):
    return math.sqrt(p / (2.0 * min(p - 1.0, 1.0)))


def stein_report(tower, xs, p):
    """``||(sum |E_k x_k|^2)^{1/2}||_p <= C_p ||(sum |x_k|^2)^{1/2}||_p`` for
    general (non-Hermitian) ``x_k`` and ``4/3 <= p <= 4``."""
    if not 4.0 / 3.0 - 1e-12 <= p <= 4:
        raise OutsideRange(f"Stein inequality needs 4/3 <= p <= 4, got {p}")
    _check_lengths(tower, xs)
    xs = [as_array(x) for x in xs]
    left = sum(abs_sq(tower.cond_exp(k, x)) for k, x in enumerate(xs))
    right = sum(abs_sq(x) for x in xs)
    return make_report("stein", p, _sqrt_norm(left, p), _sqrt_norm(right, p), stein_constant(p),
                       dim=tower.dim, n=len(tower))

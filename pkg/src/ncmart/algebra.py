"""
Finite-dimensional noncommutative probability space.

The algebra is the full ``d x d`` complex matrix algebra with the normalized
trace ``tau(x) = Tr(x) / d``.  Everything here is a pure function of its
inputs; matrix wrappers are immutable.
"""
import json
import math
from dataclasses import dataclass

import numpy as np

from ._fmt import dumps17
from .errors import (
    ConvergenceFailure,
    DimensionMismatch,
    NonHermitianInput,
    SingularPower,
)

HERMITIAN_TOL = 1e-12


def _frozen(a):
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


class GeneralMatrix:
    """Arbitrary square complex matrix (an element of the algebra that need
    not be self-adjoint)."""

    __slots__ = ("_entries",)

    def __init__(self, entries):
        a = np.asarray(entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise DimensionMismatch(f"expected a nonempty square matrix, got shape {a.shape}")
        self._entries = _frozen(a)

    @property
    def entries(self):
        return self._entries

    @property
    def dim(self):
        return self._entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._entries
        return self._entries.astype(dtype)

    def adjoint(self):
        return GeneralMatrix(self._entries.conj().T)

    def spectral_norm(self):
        return float(np.linalg.norm(self._entries, 2))

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class HermitianMatrix(GeneralMatrix):
    """Self-adjoint matrix.

    The constructor symmetrizes via ``(X + X*) / 2`` after checking that the
    input is Hermitian up to ``tol * (1 + ||X||)``.
    """

    __slots__ = ()

    def __init__(self, entries, tol=HERMITIAN_TOL):
        a = np.asarray(entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise DimensionMismatch(f"expected a nonempty square matrix, got shape {a.shape}")
        check_hermitian(a, tol)
        self._entries = _frozen((a + a.conj().T) / 2)

    def spectral_norm(self):
        w = np.linalg.eigvalsh(self._entries)
        return float(max(abs(w[0]), abs(w[-1])))


class PositiveOperator(HermitianMatrix):
    """Positive semidefinite matrix with its smallest eigenvalue cached."""

    __slots__ = ("min_eig",)

    def __init__(self, entries, tol=1e-10):
        super().__init__(entries)
        w = np.linalg.eigvalsh(self._entries)
        scale = max(abs(w[0]), abs(w[-1]))
        if w[0] < -tol * scale:
            raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {w[0]:.3e})")
        self.min_eig = float(w[0])

    def spectral_norm(self):
        return float(np.linalg.eigvalsh(self._entries)[-1])


@dataclass(frozen=True)
class TraceContext:
    """Normalized trace on ``M_d``; ``tau(1) == 1``."""

    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")

    @property
    def normalization(self):
        return 1.0 / self.dim

    def tau(self, x):
        x = np.asarray(x)
        if x.shape != (self.dim, self.dim):
            raise DimensionMismatch(f"expected {self.dim}x{self.dim}, got {x.shape}")
        return tau(x)


@dataclass(frozen=True)
class PExponent:
    p: float

    def __post_init__(self):
        if not self.p > 0:
            raise ValueError(f"exponent must be positive, got {self.p}")

    @property
    def regime(self):
        return "quasi" if self.p < 1 else "banach"

    @property
    def conjugate(self):
        return conjugate_exponent(self.p)


def conjugate_exponent(p):
    """Hölder conjugate ``p / (p - 1)``; ``inf -> 1`` and ``1 -> inf``."""
    if p <= 1:
        if p == 1:
            return math.inf
        raise ValueError(f"conjugate exponent undefined for p={p}")
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def as_array(x):
    return np.asarray(x, dtype=complex)


def adjoint(x):
    return as_array(x).conj().T


def abs_sq(x):
    """Column modulus squared ``|x|^2 = x* x``."""
    x = as_array(x)
    return x.conj().T @ x


def tau(x):
    x = np.asarray(x)
    return float(np.real(np.trace(x))) / x.shape[0]


def check_hermitian(x, tol=HERMITIAN_TOL):
    x = np.asarray(x)
    asym = np.max(np.abs(x - x.conj().T)) if x.size else 0.0
    scale = 1.0 + np.max(np.abs(x))
    if asym > tol * scale:
        raise NonHermitianInput(f"asymmetry {asym:.3e} exceeds tolerance")


# -- eigensolvers ------------------------------------------------------------

def _off_norm(a):
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def jacobi_eigh(x, tol=1e-12, max_sweeps=100):
    """Cyclic complex Jacobi eigensolver for Hermitian matrices.

    Each rotation first removes the phase of the pivot ``x[p, q]`` and then
    applies the classical real rotation that annihilates it.  Sweeps stop when
    the off-diagonal Frobenius norm falls below ``tol * ||x||_F``.

    Returns
    -------
    w : ndarray
        Eigenvalues in ascending order.
    v : ndarray
        Unitary matrix with ``x = v @ diag(w) @ v.conj().T``.
    """
    a = as_array(x).copy()
    check_hermitian(a)
    a = (a + a.conj().T) / 2
    d = a.shape[0]
    v = np.eye(d, dtype=complex)
    target = tol * max(np.linalg.norm(a), np.finfo(float).tiny)

    for _ in range(max_sweeps):
        off = _off_norm(a)
        if off <= target:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                mag = abs(apq)
                if mag == 0.0:
                    continue
                phase = apq / mag
                app, aqq = a[p, p].real, a[q, q].real
                theta = (aqq - app) / (2.0 * mag)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # phase fix on column q, then real rotation on (p, q)
                g = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]], dtype=complex)
                idx = [p, q]
                a[:, idx] = a[:, idx] @ g
                a[idx, :] = g.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                v[:, idx] = v[:, idx] @ g
    else:
        off = _off_norm(a)
        if off > target:
            raise ConvergenceFailure(f"Jacobi did not converge in {max_sweeps} sweeps")

    w = np.real(np.diag(a))
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def eigh(x, method="lapack"):
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    ``method="jacobi"`` uses the self-contained cyclic Jacobi solver;
    the default delegates to LAPACK for speed.
    """
    a = as_array(x)
    if method == "jacobi":
        return jacobi_eigh(a)
    if method != "lapack":
        raise ValueError(f"unknown method {method!r}")
    check_hermitian(a)
    w, v = np.linalg.eigh((a + a.conj().T) / 2)
    return w, v


def eigvalsh(x):
    a = as_array(x)
    return np.linalg.eigvalsh((a + a.conj().T) / 2)


# -- functional calculus -----------------------------------------------------

def func_calc(x, f, support_tol=None):
    """Apply ``f`` to the spectrum of a positive (or Hermitian) matrix.

    If ``support_tol`` is given, eigenvalues ``<= support_tol`` are treated as
    outside the support and mapped to zero; this is the pseudo-inverse
    convention used for negative powers.
    """
    w, v = eigh(x)
    if support_tol is None:
        fw = np.asarray(f(w), dtype=float)
    else:
        keep = w > support_tol
        if not keep.any():
            raise SingularPower("every eigenvalue lies below the support tolerance")
        fw = np.zeros_like(w)
        fw[keep] = f(w[keep])
    return (v * fw) @ v.conj().T


def mpow(x, r, support_tol=None):
    """Matrix power ``x**r`` of a positive matrix.

    Negative eigenvalues from roundoff are clipped to zero.  For ``r < 0`` the
    pseudo-inverse convention applies with default support tolerance
    ``1e-12 * lambda_max``.
    """
    w, v = eigh(x)
    w = np.clip(w, 0.0, None)
    if r == 0:
        fw = np.ones_like(w)
    elif r > 0:
        fw = w ** r
    else:
        tol = 1e-12 * w[-1] if support_tol is None else support_tol
        keep = w > tol
        if not keep.any():
            raise SingularPower("negative power of a numerically zero matrix")
        fw = np.zeros_like(w)
        fw[keep] = w[keep] ** r
    return (v * fw) @ v.conj().T


def msqrt(x):
    return mpow(x, 0.5)


# -- norms and order ---------------------------------------------------------

def singular_values(x):
    a = as_array(x)
    if np.allclose(a, a.conj().T, rtol=0.0, atol=1e-14 * (1.0 + np.max(np.abs(a)))):
        return np.abs(eigvalsh(a))
    return np.linalg.svd(a, compute_uv=False)


def schatten(x, p, ctx=None):
    """Normalized Schatten (quasi-)norm ``tau(|x|^p)^(1/p)``.

    ``p`` may be a float, :class:`PExponent` or ``inf`` (operator norm).
    """
    if isinstance(p, PExponent):
        p = p.p
    a = as_array(x)
    if ctx is not None and ctx.dim != a.shape[0]:
        raise DimensionMismatch(f"trace context has dim {ctx.dim}, matrix has {a.shape[0]}")
    if not p > 0:
        raise ValueError(f"exponent must be positive, got {p}")
    s = singular_values(a)
    if math.isinf(p):
        return float(s.max())
    smax = s.max()
    if smax == 0.0:
        return 0.0
    # factor out the largest singular value to avoid under/overflow in s**p
    return float(smax * np.mean((s / smax) ** p) ** (1.0 / p))


def spectral_norm(x):
    return float(singular_values(x).max())


def loewner_leq(a, b, tol=1e-10):
    """Test ``a <= b`` in the Löwner order.

    Returns ``(holds, min_gap_eig)`` where ``min_gap_eig`` is the smallest
    eigenvalue of ``b - a``; ``holds`` allows ``-tol * (1 + ||b||)``.
    """
    a, b = as_array(a), as_array(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} differ")
    gap = float(eigvalsh(b - a)[0])
    return gap >= -tol * (1.0 + spectral_norm(b)), gap


# -- random inputs -------------------------------------------------------------

def make_rng(seed):
    """Counter-based (Philox) generator keyed by ``seed``."""
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


def complex_gaussian(dim, rng, cols=None):
    """``dim x cols`` matrix of independent standard complex Gaussians
    (``E|g|^2 = 1``)."""
    cols = dim if cols is None else cols
    z = rng.standard_normal((dim, cols, 2))
    return (z[..., 0] + 1j * z[..., 1]) / math.sqrt(2.0)


def random_psd(dim, seed, scale=1.0):
    """Wishart-type sample ``scale * G G*``; reproducible from ``seed``."""
    if dim < 1:
        raise ValueError("dim must be positive")
    g = complex_gaussian(dim, make_rng(seed))
    return PositiveOperator(scale * (g @ g.conj().T))


def random_hermitian(dim, rng):
    g = complex_gaussian(dim, rng)
    return (g + g.conj().T) / 2


# -- matrix I/O ----------------------------------------------------------------

def matrix_to_dict(x):
    a = as_array(x)
    return {"dim": a.shape[0], "re": a.real.tolist(), "im": a.imag.tolist()}


def matrix_from_dict(obj):
    d = int(obj["dim"])
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj.get("im", np.zeros((d, d))), dtype=float)
    if re.shape != (d, d) or im.shape != (d, d):
        raise DimensionMismatch(f"matrix payload does not match dim={d}")
    return re + 1j * im


def dumps_matrix(x):
    return dumps17(matrix_to_dict(x))


def loads_matrix(text):
    return matrix_from_dict(json.loads(text))

"""Matrices over Z/p^{N+1} and R, Smith normal form and cokernel types.

Two implementations of the Smith form live here.  :func:`smith_normal_form`
works entry by entry with the scalar ring functions and records the row and
column transforms; it is the reference.  :func:`snf_exponents_array` runs the
same pivoting rule on a whole batch of matrices at once with numpy and only
returns the diagonal exponents; the enumeration engine uses it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from . import ring
from .errors import ConformanceError
from .modtypes import ModuleType
from .ring import RElem, RingParams


@dataclass(frozen=True, eq=False)
class RingMatrix:
    """A matrix over ``ring``; ``data`` has shape (rows, cols, d).

    Matrices over Z/p^{N+1} use the base ring (``ring.is_base``), so ``d = 1``.
    """

    ring: RingParams
    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=np.int64)
        if data.ndim == 2 and self.ring.d == 1:
            data = data[..., None]
        if data.ndim != 3 or data.shape[2] != self.ring.d:
            raise ConformanceError(f"matrix data of shape {data.shape} does not fit d={self.ring.d}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise ConformanceError("matrices must have at least one row and column")
        data %= self.ring.modulus
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_rows(cls, rows, params: RingParams) -> "RingMatrix":
        """Build from nested lists of ints (constants) or coefficient sequences."""
        entries = [[ring.element(x, params) for x in row] for row in rows]
        if len({len(row) for row in entries}) != 1:
            raise ConformanceError("ragged matrix rows")
        return cls(params, np.array(entries, dtype=np.int64).reshape(len(entries), len(entries[0]),
                                                                    params.d))

    @classmethod
    def identity(cls, params: RingParams, n: int) -> "RingMatrix":
        data = np.zeros((n, n, params.d), dtype=np.int64)
        data[np.arange(n), np.arange(n), 0] = 1
        return cls(params, data)

    @classmethod
    def zeros(cls, params: RingParams, rows: int, cols: int | None = None) -> "RingMatrix":
        return cls(params, np.zeros((rows, rows if cols is None else cols, params.d), np.int64))

    @property
    def base(self) -> str:
        return "Zmod" if self.ring.is_base else "R"

    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape[0], self.data.shape[1]

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    @property
    def n_cols(self) -> int:
        return self.data.shape[1]

    def entry(self, i: int, j: int) -> RElem:
        return tuple(int(x) for x in self.data[i, j])

    def rows(self) -> list:
        """Entries as nested lists of coefficient tuples."""
        return [[self.entry(i, j) for j in range(self.n_cols)] for i in range(self.n_rows)]

    def to_int_rows(self) -> list:
        """Nested ints for Zmod matrices, nested coefficient lists for R matrices."""
        if self.ring.d == 1:
            return self.data[..., 0].tolist()
        return self.data.tolist()

    def reduce_to(self, target: RingParams) -> "RingMatrix":
        if target.p != self.ring.p or target.d != self.ring.d or target.N > self.ring.N:
            raise ConformanceError("target is not a truncation of this ring")
        return RingMatrix(target, self.data % target.modulus)

    def __eq__(self, other):
        if not isinstance(other, RingMatrix):
            return NotImplemented
        return self.ring == other.ring and np.array_equal(self.data, other.data)

    def __hash__(self):
        return hash((self.ring, self.data.tobytes(), self.data.shape))

    def __matmul__(self, other):
        return mat_mul(self, other)

    def __repr__(self):
        return f"RingMatrix({self.base}, {self.to_int_rows()})"


def embed(X: RingMatrix, params: RingParams) -> RingMatrix:
    """View a Zmod matrix as a matrix over R (constant coefficients)."""
    if not X.ring.is_base or X.ring.p != params.p or X.ring.N != params.N:
        raise ConformanceError("embed expects a matrix over Z/p^{N+1}")
    data = np.zeros(X.shape + (params.d,), dtype=np.int64)
    data[..., 0] = X.data[..., 0]
    return RingMatrix(params, data)


def matmul_array(A: np.ndarray, B: np.ndarray, params: RingParams) -> np.ndarray:
    """Batched product of coefficient arrays (..., r, k, d) @ (..., k, c, d)."""
    out = None
    for k in range(A.shape[-2]):
        term = ring.mul_array(A[..., :, k, None, :], B[..., None, k, :, :], params)
        out = term if out is None else (out + term) % params.modulus
    return out


def mat_mul(A: RingMatrix, B: RingMatrix) -> RingMatrix:
    if A.ring != B.ring:
        raise ConformanceError("matrices live over different rings")
    if A.n_cols != B.n_rows:
        raise ConformanceError(f"cannot multiply {A.shape} by {B.shape}")
    return RingMatrix(A.ring, matmul_array(A.data, B.data, A.ring))


def mat_add(A: RingMatrix, B: RingMatrix) -> RingMatrix:
    if A.ring != B.ring or A.shape != B.shape:
        raise ConformanceError("shape or ring mismatch")
    return RingMatrix(A.ring, A.data + B.data)


def mat_scale(A: RingMatrix, c: RElem) -> RingMatrix:
    return RingMatrix(A.ring, ring.mul_array(A.data, np.array(c, dtype=np.int64), A.ring))


def eval_poly(X: RingMatrix, params: RingParams) -> RingMatrix:
    """P(X) over Z/p^{N+1} by Horner's rule."""
    if not X.ring.is_base or X.n_rows != X.n_cols:
        raise ConformanceError("eval_poly expects a square matrix over Z/p^{N+1}")
    if (X.ring.p, X.ring.N) != (params.p, params.N):
        raise ConformanceError("matrix and polynomial live over different Z/p^{N+1}")
    return RingMatrix(X.ring, eval_poly_array(X.data[..., 0], params)[..., None])


def eval_poly_array(X: np.ndarray, params: RingParams) -> np.ndarray:
    """P(X) for a batch of integer matrices (..., n, n)."""
    m = params.modulus
    n = X.shape[-1]
    eye = np.eye(n, dtype=np.int64)
    acc = np.broadcast_to(eye * params.poly[-1], X.shape).copy()
    for c in reversed(params.poly[:-1]):
        prod = np.zeros_like(acc)
        for k in range(n):
            prod = (prod + acc[..., :, k, None] * X[..., None, k, :] % m) % m
        acc = (prod + c * eye) % m
    return acc


def companion_pencil(X: RingMatrix, params: RingParams) -> RingMatrix:
    """X - t̄ I over R."""
    Z = embed(X, params)
    n = X.n_rows
    data = Z.data.copy()
    t = np.array(ring.tbar(params), dtype=np.int64)
    data[np.arange(n), np.arange(n)] -= t
    return RingMatrix(params, data)


# ---------------------------------------------------------------------------
# reference Smith normal form


@dataclass(frozen=True)
class SnfResult:
    """``left @ A @ right`` is diagonal with p^{e_i} at position i."""

    diagonal_exponents: Tuple[int, ...]
    left: RingMatrix
    right: RingMatrix


def smith_normal_form(A: RingMatrix) -> SnfResult:
    """Diagonalize A by invertible row and column operations.

    At each step the minimal-valuation entry of the trailing block (first in
    row-major order on ties) is moved to the pivot, scaled to a pure power of
    p, and used to clear its row and column.
    """
    params = A.ring
    cap = params.N + 1
    r, c = A.shape
    M = A.rows()
    L = RingMatrix.identity(params, r).rows()
    T = RingMatrix.identity(params, c).rows()
    exps = []

    def row_axpy(rows, dst, src, f):
        # rows[dst] -= f * rows[src]
        rows[dst] = [ring.ring_sub(x, ring.ring_mul(f, y, params), params)
                     for x, y in zip(rows[dst], rows[src])]

    for k in range(min(r, c)):
        best = None
        for i in range(k, r):
            for j in range(k, c):
                v = ring.valuation(M[i][j], params)
                if best is None or v < best[0]:
                    best = (v, i, j)
        v, i, j = best
        if v == cap:
            exps.extend([cap] * (min(r, c) - k))
            break
        M[k], M[i] = M[i], M[k]
        L[k], L[i] = L[i], L[k]
        for row in M:
            row[k], row[j] = row[j], row[k]
        for row in T:
            row[k], row[j] = row[j], row[k]
        uinv = ring.invert_unit(ring.divide_by_p_power(M[k][k], v, params), params)
        M[k] = [ring.ring_mul(uinv, x, params) for x in M[k]]
        L[k] = [ring.ring_mul(uinv, x, params) for x in L[k]]
        for i2 in range(r):
            if i2 != k and any(M[i2][k]):
                f = ring.divide_by_p_power(M[i2][k], v, params)
                row_axpy(M, i2, k, f)
                row_axpy(L, i2, k, f)
        for j2 in range(k + 1, c):
            if any(M[k][j2]):
                f = ring.divide_by_p_power(M[k][j2], v, params)
                # column j2 -= f * column k
                for rows in (M, T):
                    for row in rows:
                        row[j2] = ring.ring_sub(row[j2], ring.ring_mul(row[k], f, params), params)
        exps.append(v)

    return SnfResult(tuple(exps), RingMatrix.from_rows(L, params), RingMatrix.from_rows(T, params))


def diagonal_matrix(exponents: Sequence[int], params: RingParams, rows: int,
                    cols: int) -> RingMatrix:
    data = np.zeros((rows, cols, params.d), dtype=np.int64)
    for i, e in enumerate(exponents):
        data[i, i, 0] = params.p**e % params.modulus
    return RingMatrix(params, data)


def determinant(A: RingMatrix) -> RElem:
    """Leibniz expansion; meant for the small matrices used in checks."""
    n = A.n_rows
    if n != A.n_cols:
        raise ConformanceError("determinant of a non-square matrix")
    if n > 7:
        raise ValueError("Leibniz determinant limited to n <= 7")
    params = A.ring
    M = A.rows()
    total = ring.zero(params)
    for perm in itertools.permutations(range(n)):
        term = ring.one(params)
        for i, j in enumerate(perm):
            term = ring.ring_mul(term, M[i][j], params)
        inversions = sum(1 for a in range(n) for b in range(a + 1, n) if perm[a] > perm[b])
        total = (ring.ring_sub if inversions % 2 else ring.ring_add)(total, term, params)
    return total


def is_invertible(A: RingMatrix) -> bool:
    return ring.is_unit(determinant(A), A.ring)


def check_snf(A: RingMatrix, result: SnfResult) -> bool:
    """Transforms reproduce the diagonal exactly and are invertible."""
    target = diagonal_matrix(result.diagonal_exponents, A.ring, *A.shape)
    if result.left @ A @ result.right != target:
        return False
    if list(result.diagonal_exponents) != sorted(result.diagonal_exponents):
        return False
    if max(A.shape) <= 7:
        return is_invertible(result.left) and is_invertible(result.right)
    return True


def cokernel_type(A: RingMatrix) -> ModuleType:
    """Type of the cokernel of a square matrix; parts equal to N+1 are free summands."""
    if A.n_rows != A.n_cols:
        raise ConformanceError("cokernel_type expects a square matrix")
    return ModuleType.of(smith_normal_form(A).diagonal_exponents)


def companion_cokernel(X: RingMatrix, params: RingParams) -> ModuleType:
    """R-module type of cok_R(X - t̄ I), which is cok(P(X)) with its R-action."""
    return cokernel_type(companion_pencil(X, params))


def abelianize(m: ModuleType, params: RingParams) -> ModuleType:
    """Abelian-group type of an R-module: each part repeated d times."""
    return ModuleType.of(x for x in m.parts for _ in range(params.d))


def random_matrix(params: RingParams, n: int, rng: np.random.Generator,
                  cols: int | None = None) -> RingMatrix:
    shape = (n, n if cols is None else cols, params.d)
    return RingMatrix(params, rng.integers(0, params.modulus, size=shape))


def random_invertible(params: RingParams, n: int, rng: np.random.Generator) -> RingMatrix:
    while True:
        U = random_matrix(params, n, rng)
        if is_invertible(U):
            return U


# ---------------------------------------------------------------------------
# batched kernel


def snf_exponents_array(mats: np.ndarray, params: RingParams) -> np.ndarray:
    """Sorted Smith exponents for a batch of square matrices of shape (B, n, n, d).

    Same pivot rule as :func:`smith_normal_form`.  Once the pivot column is
    cleared the pivot row can be dropped without touching the trailing block,
    so only row operations are performed.
    """
    ring.check_array_modulus(params)
    A = np.array(mats, dtype=np.int64, copy=True)
    B, n = A.shape[0], A.shape[1]
    m = params.modulus
    exps = np.empty((B, n), dtype=np.int64)
    idx = np.arange(B)
    for k in range(n):
        s = n - k
        val = ring.valuation_array(A[:, k:, k:, :], params).reshape(B, s * s)
        flat = val.argmin(axis=1)
        v = val[idx, flat]
        exps[:, k] = v
        if k == n - 1:
            break
        pi, pj = flat // s + k, flat % s + k
        rows_k = A[idx, k].copy()
        A[idx, k] = A[idx, pi]
        A[idx, pi] = rows_k
        cols_k = A[idx, :, k].copy()
        A[idx, :, k] = A[idx, :, pj]
        A[idx, :, pj] = cols_k
        u = ring.divp_array(A[:, k, k], v, params)
        uinv = ring.inverse_array(u, params)
        c = ring.divp_array(A[:, k + 1:, k], v[:, None], params)
        f = ring.mul_array(c, uinv[:, None, :], params)
        upd = ring.mul_array(f[:, :, None, :], A[:, None, k, k + 1:, :], params)
        A[:, k + 1:, k + 1:] = (A[:, k + 1:, k + 1:] - upd) % m
    return exps


def type_codes(exps: np.ndarray, params: RingParams) -> np.ndarray:
    """Integer code of each sorted exponent row, base N+2."""
    base = params.N + 2
    weights = base ** np.arange(exps.shape[1], dtype=np.int64)
    return exps @ weights


def decode_type(code: int, n: int, params: RingParams) -> ModuleType:
    base = params.N + 2
    exps = [(int(code) // base**i) % base for i in range(n)]
    return ModuleType.of(exps)

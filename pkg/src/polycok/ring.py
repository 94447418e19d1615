"""Arithmetic in Z/p^{N+1} and in R = (Z/p^{N+1})[t]/(P(t)).

Elements of R are tuples of ``d`` least nonnegative residues, the coefficient of
``t^i`` at index ``i``.  Elements of Z/p^{N+1} are plain ints; the ring itself is
modelled as the ``d = 1`` quotient by ``P(t) = t`` (see :meth:`RingParams.base`).

The module has two layers.  Scalar functions (``ring_add``, ``ring_mul``,
``invert_unit`` ...) work on tuples with Python integers and are the reference
path.  The ``*_array`` functions do the same arithmetic on int64 numpy arrays
whose last axis holds the coefficients; the enumeration kernels use them.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence, Tuple

import numpy as np

from .errors import ConformanceError, NotAUnit

RElem = Tuple[int, ...]

MAX_MODULUS = 2**32
# a*b for a, b < modulus must fit in int64
MAX_ARRAY_MODULUS = 2**31


def is_prime(n: int) -> bool:
    """Deterministic trial-division primality test."""
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


# ---------------------------------------------------------------------------
# polynomials over F_p, as ascending coefficient lists without trailing zeros


def _trim(a: Sequence[int]) -> list:
    a = list(a)
    while a and a[-1] == 0:
        a.pop()
    return a


def _fp_divmod(a, b, p):
    a = _trim(x % p for x in a)
    b = _trim(x % p for x in b)
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    inv_lead = pow(b[-1], -1, p)
    quot = [0] * max(len(a) - len(b) + 1, 0)
    while len(a) >= len(b):
        shift = len(a) - len(b)
        c = a[-1] * inv_lead % p
        quot[shift] = c
        for i, bi in enumerate(b):
            a[shift + i] = (a[shift + i] - c * bi) % p
        a = _trim(a)
    return _trim(quot), a


def _fp_mul(a, b, p):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] = (out[i + j] + x * y) % p
    return _trim(out)


def _fp_sub(a, b, p):
    n = max(len(a), len(b))
    a = list(a) + [0] * (n - len(a))
    b = list(b) + [0] * (n - len(b))
    return _trim((x - y) % p for x, y in zip(a, b))


def _fp_gcd(a, b, p):
    a, b = _trim(x % p for x in a), _trim(x % p for x in b)
    while b:
        a, b = b, _fp_divmod(a, b, p)[1]
    if a:
        inv = pow(a[-1], -1, p)
        a = [x * inv % p for x in a]
    return a


def _fp_xgcd(a, b, p):
    """Return (g, s, t) with s*a + t*b = g monic."""
    r0, r1 = _trim(x % p for x in a), _trim(x % p for x in b)
    s0, s1, t0, t1 = [1], [], [], [1]
    while r1:
        q, r = _fp_divmod(r0, r1, p)
        r0, r1 = r1, r
        s0, s1 = s1, _fp_sub(s0, _fp_mul(q, s1, p), p)
        t0, t1 = t1, _fp_sub(t0, _fp_mul(q, t1, p), p)
    if not r0:
        return [], s0, t0
    inv = pow(r0[-1], -1, p)
    return ([x * inv % p for x in r0], [x * inv % p for x in s0], [x * inv % p for x in t0])


def _fp_powmod(base, e, mod, p):
    result = [1]
    base = _fp_divmod(base, mod, p)[1]
    while e:
        if e & 1:
            result = _fp_divmod(_fp_mul(result, base, p), mod, p)[1]
        base = _fp_divmod(_fp_mul(base, base, p), mod, p)[1]
        e >>= 1
    return result


def _prime_factors(n: int) -> list:
    out, f = [], 2
    while f * f <= n:
        if n % f == 0:
            out.append(f)
            while n % f == 0:
                n //= f
        f += 1
    if n > 1:
        out.append(n)
    return out


def irreducible_by_trial(poly: Sequence[int], p: int) -> bool:
    """Irreducibility over F_p by dividing out every monic factor of degree <= d/2."""
    f = _trim(x % p for x in poly)
    d = len(f) - 1
    if d < 1:
        return False
    for k in range(1, d // 2 + 1):
        for low in itertools.product(range(p), repeat=k):
            if not _fp_divmod(f, list(low) + [1], p)[1]:
                return False
    return True


def irreducible_by_rabin(poly: Sequence[int], p: int) -> bool:
    """Rabin's test: x^{p^d} = x mod f and gcd(x^{p^{d/r}} - x, f) = 1 for primes r | d."""
    f = _trim(x % p for x in poly)
    d = len(f) - 1
    if d < 1:
        return False
    inv = pow(f[-1], -1, p)
    f = [x * inv % p for x in f]
    x = [0, 1]
    if _fp_sub(_fp_powmod(x, p**d, f, p), _fp_divmod(x, f, p)[1], p):
        return False
    for r in _prime_factors(d):
        h = _fp_sub(_fp_powmod(x, p ** (d // r), f, p), x, p)
        if len(_fp_gcd(f, h, p)) != 1:
            return False
    return True


def is_irreducible_mod_p(poly: Sequence[int], p: int) -> bool:
    d = len(_trim(x % p for x in poly)) - 1
    if d <= 4:
        return irreducible_by_trial(poly, p)
    return irreducible_by_rabin(poly, p)


def first_irreducible(p: int, d: int) -> tuple:
    """The lexicographically first monic irreducible polynomial of degree d over F_p."""
    for low in itertools.product(range(p), repeat=d):
        cand = tuple(reversed(low)) + (1,)
        if is_irreducible_mod_p(cand, p):
            return cand
    raise ValueError(f"no irreducible polynomial of degree {d} over F_{p}")  # pragma: no cover


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RingParams:
    """Ambient data: prime ``p``, truncation ``N`` and the monic polynomial ``P``.

    ``poly`` lists the coefficients of P in ascending order; the modulus is
    ``p**(N+1)``.
    """

    p: int
    N: int
    poly: Tuple[int, ...]
    modulus: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "poly", tuple(int(c) for c in self.poly))
        if not is_prime(self.p):
            raise ValueError(f"p={self.p} is not prime")
        if self.N < 0:
            raise ValueError("N must be >= 0")
        m = self.p ** (self.N + 1)
        if m > MAX_MODULUS:
            raise ValueError(f"modulus p^(N+1) = {m} exceeds 2^32")
        object.__setattr__(self, "modulus", m)
        if len(self.poly) < 2:
            raise ValueError("P must have degree >= 1")
        if self.poly[-1] != 1:
            raise ValueError("P must be monic")
        if any(not 0 <= c < m for c in self.poly):
            raise ValueError(f"coefficients of P must lie in [0, {m})")
        if not is_irreducible_mod_p(self.poly, self.p):
            raise ValueError(f"P = {self.poly} is not irreducible mod {self.p}")

    @property
    def d(self) -> int:
        return len(self.poly) - 1

    @property
    def q(self) -> int:
        return self.p**self.d

    @property
    def size(self) -> int:
        """Number of elements of R."""
        return self.modulus**self.d

    @property
    def is_base(self) -> bool:
        return self.poly == (0, 1)

    def base(self) -> "RingParams":
        """Z/p^{N+1} as the degree-one quotient by P(t) = t."""
        return RingParams(self.p, self.N, (0, 1))

    def truncate(self, k: int) -> "RingParams":
        """The quotient ring R / p^k R, for 1 <= k <= N+1."""
        if not 1 <= k <= self.N + 1:
            raise ValueError(f"truncation level {k} outside [1, {self.N + 1}]")
        mk = self.p**k
        return RingParams(self.p, k - 1, tuple(c % mk for c in self.poly))

    def residue_field(self) -> "RingParams":
        return self.truncate(1)

    def describe(self) -> dict:
        return {"p": self.p, "N": self.N, "poly": list(self.poly), "d": self.d, "q": self.q,
                "modulus": self.modulus}


def parse_poly(text: str, p: int, N: int) -> tuple:
    """Parse ascending comma-separated coefficients; negatives are reduced mod p^{N+1}."""
    m = p ** (N + 1)
    try:
        coeffs = [int(tok) % m for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise ValueError(f"cannot parse polynomial {text!r}") from exc
    return tuple(coeffs)


def format_poly(poly: Sequence[int]) -> str:
    return ",".join(str(c) for c in poly)


# ---------------------------------------------------------------------------
# scalar element arithmetic


def _check(a: RElem, params: RingParams) -> None:
    if len(a) != params.d:
        raise ConformanceError(f"element {a} has {len(a)} coefficients, ring has d={params.d}")


def element(coeffs, params: RingParams) -> RElem:
    """Canonical element from an int (constant) or a coefficient sequence."""
    if isinstance(coeffs, (int, np.integer)):
        coeffs = [int(coeffs)] + [0] * (params.d - 1)
    coeffs = tuple(int(c) % params.modulus for c in coeffs)
    _check(coeffs, params)
    return coeffs


def zero(params: RingParams) -> RElem:
    return (0,) * params.d


def one(params: RingParams) -> RElem:
    return (1,) + (0,) * (params.d - 1)


def tbar(params: RingParams) -> RElem:
    """Image of t in R; equals -P(0) when d = 1."""
    if params.d == 1:
        return ((-params.poly[0]) % params.modulus,)
    return (0, 1) + (0,) * (params.d - 2)


def ring_add(a: RElem, b: RElem, params: RingParams) -> RElem:
    _check(a, params)
    _check(b, params)
    m = params.modulus
    return tuple((x + y) % m for x, y in zip(a, b))


def ring_sub(a: RElem, b: RElem, params: RingParams) -> RElem:
    _check(a, params)
    _check(b, params)
    m = params.modulus
    return tuple((x - y) % m for x, y in zip(a, b))


def ring_neg(a: RElem, params: RingParams) -> RElem:
    _check(a, params)
    return tuple((-x) % params.modulus for x in a)


def ring_mul(a: RElem, b: RElem, params: RingParams) -> RElem:
    """Schoolbook product reduced mod P(t) and mod p^{N+1}."""
    _check(a, params)
    _check(b, params)
    d, m, P = params.d, params.modulus, params.poly
    prod = [0] * (2 * d - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                prod[i + j] += x * y
    for k in range(2 * d - 2, d - 1, -1):
        c = prod[k] % m
        if c:
            for j in range(d):
                prod[k - d + j] -= c * P[j]
    return tuple(x % m for x in prod[:d])


def ring_pow(a: RElem, e: int, params: RingParams) -> RElem:
    result = one(params)
    while e:
        if e & 1:
            result = ring_mul(result, a, params)
        a = ring_mul(a, a, params)
        e >>= 1
    return result


def scale(a: RElem, c: int, params: RingParams) -> RElem:
    return tuple(x * c % params.modulus for x in a)


def _vp(x: int, p: int, cap: int) -> int:
    if x == 0:
        return cap
    k = 0
    while x % p == 0 and k < cap:
        x //= p
        k += 1
    return k


def valuation(a: RElem, params: RingParams) -> int:
    """Largest k <= N+1 with p^k dividing every coefficient; v(0) = N+1."""
    _check(a, params)
    cap = params.N + 1
    return min(_vp(x, params.p, cap) for x in a)


def is_unit(a: RElem, params: RingParams) -> bool:
    return valuation(a, params) == 0


def divide_by_p_power(a: RElem, k: int, params: RingParams) -> RElem:
    """Some b with p^k b = a; requires valuation(a) >= k."""
    if valuation(a, params) < k:
        raise ArithmeticError(f"{a} is not divisible by p^{k}")
    pk = params.p**k
    return tuple(x // pk for x in a)


def invert_unit(a: RElem, params: RingParams) -> RElem:
    """Inverse of a unit: extended Euclid in F_q, then Newton lifting b <- b(2 - ab)."""
    if not is_unit(a, params):
        raise NotAUnit(f"{a} has positive valuation in R")
    p = params.p
    g, s, _ = _fp_xgcd(list(a), list(params.poly), p)
    if g != [1]:  # pragma: no cover - excluded by irreducibility of P mod p
        raise NotAUnit(f"{a} is not invertible mod p")
    s = _fp_divmod(s, params.poly, p)[1]
    b = element(list(s) + [0] * (params.d - len(s)), params)
    two = element(2, params)
    for _ in range(math.ceil(math.log2(params.N + 1)) if params.N else 0):
        b = ring_mul(b, ring_sub(two, ring_mul(a, b, params), params), params)
    if ring_mul(a, b, params) != one(params):  # pragma: no cover
        raise ArithmeticError("Newton lifting did not converge")
    return b


def reduce_to(a: RElem, target: RingParams) -> RElem:
    """Image of ``a`` in a truncation ``target`` of its ring."""
    return tuple(x % target.modulus for x in a)


def iter_elements(params: RingParams) -> Iterator[RElem]:
    """All elements of R, in coefficient-lexicographic order."""
    for c in itertools.product(range(params.modulus), repeat=params.d):
        yield tuple(c)


def count_units(params: RingParams) -> int:
    return sum(1 for a in iter_elements(params) if is_unit(a, params))


# ---------------------------------------------------------------------------
# vectorized arithmetic on int64 arrays, coefficients on the last axis


def check_array_modulus(params: RingParams) -> None:
    if params.modulus > MAX_ARRAY_MODULUS:
        raise ValueError(f"modulus {params.modulus} too large for int64 kernels")


def mul_array(a: np.ndarray, b: np.ndarray, params: RingParams) -> np.ndarray:
    """Broadcasting product in R of two coefficient arrays."""
    d, m, P = params.d, params.modulus, params.poly
    shape = np.broadcast_shapes(a.shape, b.shape)
    prod = np.zeros(shape[:-1] + (2 * d - 1,), dtype=np.int64)
    for i in range(d):
        ai = a[..., i]
        for j in range(d):
            prod[..., i + j] += ai * b[..., j] % m
        prod %= m
    for k in range(2 * d - 2, d - 1, -1):
        c = prod[..., k]
        for j in range(d):
            if P[j]:
                prod[..., k - d + j] = (prod[..., k - d + j] - c * P[j]) % m
    return prod[..., :d]


def valuation_array(a: np.ndarray, params: RingParams) -> np.ndarray:
    """Elementwise valuation (min over the coefficient axis), v(0) = N+1."""
    v = np.zeros(a.shape, dtype=np.int64)
    pk = 1
    for _ in range(params.N + 1):
        pk *= params.p
        v += a % pk == 0
    return v.min(axis=-1)


def divp_array(a: np.ndarray, k: np.ndarray, params: RingParams) -> np.ndarray:
    """Coefficientwise a // p^k, with ``k`` broadcast over the coefficient axis."""
    return a // (params.p ** np.asarray(k, dtype=np.int64))[..., None]


def pow_array(a: np.ndarray, e: int, params: RingParams) -> np.ndarray:
    result = np.zeros_like(a)
    result[..., 0] = 1
    base = a
    while e:
        if e & 1:
            result = mul_array(result, base, params)
        base = mul_array(base, base, params)
        e >>= 1
    return result


def inverse_array(a: np.ndarray, params: RingParams) -> np.ndarray:
    """Inverse of units via the unit-group order (q-1) q^N; non-units map to garbage."""
    order = (params.q - 1) * params.q**params.N
    return pow_array(a, order - 1, params)

"""Isomorphism types of finite modules over a chain ring, and the closed forms.

A finite module over a DVR quotient with uniformizer p is ``⊕ R0/p^{λ_i}``; we
store the exponents as a weakly decreasing tuple.  All formula values are
:class:`fractions.Fraction`.
"""

from __future__ import annotations

import functools
import itertools
from collections import Counter
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Iterable, Sequence, Tuple

from . import ring
from .errors import BudgetExceeded
from .ring import RingParams


@functools.total_ordering
@dataclass(frozen=True)
class ModuleType:
    """Partition naming the module ``⊕ R0/p^{parts[i]}``. Empty means trivial."""

    parts: Tuple[int, ...] = ()

    def __post_init__(self):
        parts = tuple(int(x) for x in self.parts)
        if any(x < 1 for x in parts):
            raise ValueError(f"module type parts must be >= 1, got {parts}")
        if list(parts) != sorted(parts, reverse=True):
            raise ValueError(f"module type parts must be weakly decreasing, got {parts}")
        object.__setattr__(self, "parts", parts)

    @classmethod
    def of(cls, exponents: Iterable[int]) -> "ModuleType":
        """Normalize any exponent multiset: drop zeros, sort decreasing."""
        return cls(tuple(sorted((int(e) for e in exponents if e), reverse=True)))

    def __lt__(self, other):
        if not isinstance(other, ModuleType):
            return NotImplemented
        return (len(self.parts), self.parts) < (len(other.parts), other.parts)

    def __len__(self):
        return len(self.parts)

    def __iter__(self):
        return iter(self.parts)

    def __str__(self):
        return ",".join(map(str, self.parts))

    def __repr__(self):
        return f"ModuleType({list(self.parts)})"

    @property
    def length(self) -> int:
        """log_q of the module size."""
        return sum(self.parts)


def parse_partition(text: str) -> ModuleType:
    """``"2,1,1"`` -> ModuleType((2, 1, 1)); the empty string is the trivial module."""
    text = text.strip()
    if text in ("", "[]", "0"):
        return ModuleType()
    try:
        return ModuleType.of(int(tok) for tok in text.strip("[]").split(","))
    except ValueError as exc:
        raise ValueError(f"cannot parse partition {text!r}") from exc


def rank_q(G: ModuleType) -> int:
    return len(G.parts)


def reduce_mod(G: ModuleType, k: int) -> ModuleType:
    """Type of G / p^k G."""
    if k < 0:
        raise ValueError("k must be >= 0")
    return ModuleType.of(min(x, k) for x in G.parts)


def annihilated_by(G: ModuleType, k: int) -> bool:
    return all(x <= k for x in G.parts)


def partitions_up_to(total: int, max_part: int | None = None) -> list:
    """All partitions with sum <= total (and parts <= max_part), trivial one included."""
    out = []

    def rec(remaining, cap, prefix):
        out.append(ModuleType(tuple(prefix)))
        for x in range(min(remaining, cap), 0, -1):
            rec(remaining - x, x, prefix + [x])

    rec(total, total if max_part is None else max_part, [])
    return sorted(out)


def _prime_power(q: int) -> Tuple[int, int]:
    for p in range(2, q + 1):
        if q % p == 0:
            e, r = 0, q
            while r % p == 0:
                r //= p
                e += 1
            if r != 1:
                break
            return p, e
    raise ValueError(f"q={q} is not a prime power")


def gl_order(r: int, q: int) -> int:
    out = 1
    for i in range(r):
        out *= q**r - q**i
    return out


def aut_order(G: ModuleType, q: int) -> int:
    """|Aut(G)| for G = ⊕ R0/p^{λ_i} over a DVR with residue field of size q.

    q^{Σ_{i,j} min(λ_i, λ_j)} · ∏_k ∏_{j=1}^{m_k} (1 - q^{-j}), m_k the
    multiplicity of the part k.
    """
    lam = G.parts
    value = Fraction(q) ** sum(min(a, b) for a in lam for b in lam)
    for mult in Counter(lam).values():
        for j in range(1, mult + 1):
            value *= 1 - Fraction(1, q**j)
    if value.denominator != 1:  # pragma: no cover
        raise ArithmeticError(f"non-integral automorphism count for {G}")
    return int(value)


# ---------------------------------------------------------------------------
# brute-force oracle on a concrete module


class _ConcreteModule:
    """G = ⊕ GR/p^{λ_j} over the Galois ring with residue field F_q."""

    def __init__(self, G: ModuleType, q: int):
        p, e = _prime_power(q)
        self.G, self.p, self.q = G, p, q
        poly = ring.first_irreducible(p, e) if e > 1 else (0, 1)
        self.rings = [RingParams(p, lam - 1, tuple(c % p**lam for c in poly)) for lam in G.parts]
        self.field = RingParams(p, 0, tuple(c % p for c in poly))

    def elements(self):
        return itertools.product(*(list(ring.iter_elements(r)) for r in self.rings))

    def order_exponent(self, g) -> int:
        """Smallest k with p^k g = 0."""
        return max((lam - ring.valuation(c, r) for c, r, lam in zip(g, self.rings, self.G.parts)),
                   default=0)

    def residue(self, g) -> int:
        """Image of g in G/pG = F_q^r, encoded base p."""
        code = 0
        for c in g:
            for x in c:
                code = code * self.p + x % self.p
        return code

    def residue_tables(self):
        """Addition table and F_q-lines {c·v} for the encoded residue space."""
        p, F, r = self.p, self.field, len(self.G.parts)
        e = F.d
        vectors = list(itertools.product(*(list(ring.iter_elements(F)) for _ in range(r))))

        def encode(v):
            code = 0
            for c in v:
                for x in c:
                    code = code * p + x
            return code

        width = r * e
        digits = [tuple((code // p ** k) % p for k in range(width)) for code in range(p ** width)]
        add = [[sum(((a + b) % p) * p ** k for k, (a, b) in enumerate(zip(da, db)))
                for db in digits] for da in digits]
        lines = {}
        for v in vectors:
            lines[encode(v)] = frozenset(
                encode(tuple(ring.ring_mul(c, x, F) for x in v)) for c in ring.iter_elements(F))
        return add, lines

    def apply(self, images, x):
        """Endomorphism sending the j-th generator to images[j], applied to x."""
        out = [ring.zero(r) for r in self.rings]
        for xj, gj in zip(x, images):
            for i, r in enumerate(self.rings):
                out[i] = ring.ring_add(out[i], ring.ring_mul(ring.reduce_to(xj, r), gj[i], r), r)
        return tuple(out)


def aut_order_bruteforce(G: ModuleType, q: int, budget: int = 4096) -> int:
    """Count automorphisms of a concrete G by enumerating its elements.

    An endomorphism is a tuple of images (g_1, ..., g_r) of the standard
    generators, with g_j killed by p^{λ_j}; it is an automorphism iff it is
    onto, i.e. iff the residues of the g_j span G/pG.  Tuples are counted by a
    depth-first walk over the admissible images grouped by residue, memoized on
    the span reached so far.
    """
    if not G.parts:
        return 1
    size = q ** G.length
    if size > budget:
        raise BudgetExceeded(size, budget, "module elements")
    M = _ConcreteModule(G, q)
    by_level = {lam: Counter() for lam in set(G.parts)}
    for g in M.elements():
        k = M.order_exponent(g)
        res = M.residue(g)
        for lam, counter in by_level.items():
            if k <= lam:
                counter[res] += 1
    add, lines = M.residue_tables()
    r = len(G.parts)

    @functools.lru_cache(maxsize=None)
    def count(i: int, S: frozenset) -> int:
        if i == r:
            return 1
        total = 0
        for v, mult in by_level[G.parts[i]].items():
            if v not in S:
                span = frozenset(add[s][w] for s in S for w in lines[v])
                total += mult * count(i + 1, span)
        return total

    return count(0, frozenset([0]))


def aut_order_by_images(G: ModuleType, q: int, budget: int = 2**16) -> int:
    """Slowest oracle: test every endomorphism for bijectivity on all of G."""
    if not G.parts:
        return 1
    M = _ConcreteModule(G, q)
    elems = list(M.elements())
    admissible = [[g for g in elems if M.order_exponent(g) <= lam] for lam in G.parts]
    n_end = 1
    for a in admissible:
        n_end *= len(a)
    if n_end * len(elems) > budget:
        raise BudgetExceeded(n_end * len(elems), budget, "endomorphism evaluations")
    count = 0
    for images in itertools.product(*admissible):
        if len({M.apply(images, x) for x in elems}) == len(elems):
            count += 1
    return count


# ---------------------------------------------------------------------------
# closed forms


def _cl_factor(G: ModuleType, q: int) -> Fraction:
    r = rank_q(G)
    value = Fraction(q) ** (r * r)
    for i in range(1, r + 1):
        value *= (1 - Fraction(1, q**i)) ** 2
    return value / aut_order(G, q)


def theorem_rhs_count(G: ModuleType, params: RingParams, n: int) -> Fraction:
    """Predicted number of lifts X of a valid residue with cok(P(X)) ≅ G.

    p^{N n²} · q^{r²} ∏_{i=1}^{r} (1 - q^{-i})² / |Aut_R(G)|, r = rank_q(G).
    """
    if not annihilated_by(G, params.N):
        raise ValueError(f"G={G} is not killed by p^N with N={params.N}")
    return Fraction(params.p) ** (params.N * n * n) * _cl_factor(G, params.q)


def theorem_rhs_probability(G: ModuleType, params: RingParams, n: int) -> Fraction:
    """p^{d r² - n²} ∏_{i=1}^{r} (1 - p^{-i d})² / |Aut(G)|; independent of N."""
    if not annihilated_by(G, params.N):
        raise ValueError(f"G={G} is not killed by p^N with N={params.N}")
    p, d, r = params.p, params.d, rank_q(G)
    value = Fraction(p) ** (d * r * r - n * n)
    for i in range(1, r + 1):
        value *= (1 - Fraction(1, p ** (i * d))) ** 2
    return value / aut_order(G, params.q)


def fw_rhs(G: ModuleType, p: int, n: int) -> Fraction:
    r = rank_q(G)
    value = Fraction(p) ** (r * r - n * n)
    for i in range(1, r + 1):
        value *= (1 - Fraction(1, p**i)) ** 2
    return value / aut_order(G, p)


def lemma_r_count(H: ModuleType, params: RingParams, n: int) -> Fraction:
    """Predicted number of lifts Z ∈ Mat_n(R) of a valid residue with cok_R(Z) ≅ H."""
    if not annihilated_by(H, params.N):
        raise ValueError(f"H={H} is not killed by p^N with N={params.N}")
    return Fraction(params.q) ** (params.N * n * n) * _cl_factor(H, params.q)


def conjecture_rhs_count(Gs: Sequence[ModuleType], params_list: Sequence[RingParams],
                         n: int) -> Fraction:
    """Joint count predicted for several distinct irreducible polynomials."""
    first = params_list[0]
    value = Fraction(first.p) ** (first.N * n * n)
    for G, params in zip(Gs, params_list):
        if not annihilated_by(G, params.N):
            raise ValueError(f"G={G} is not killed by p^N with N={params.N}")
        value *= _cl_factor(G, params.q)
    return value


def cohen_lenstra_limit(G: ModuleType, q: int, terms: int = 64) -> Fraction:
    """∏_{i=1}^{terms} (1 - q^{-i}) / |Aut(G)|, the truncated limit law."""
    value = Fraction(1, aut_order(G, q))
    for i in range(1, terms + 1):
        value *= 1 - Fraction(1, q**i)
    return value


# ---------------------------------------------------------------------------
# serialization of exact rationals


def decimal_display(x: Fraction, digits: int = 12) -> str:
    with localcontext() as ctx:
        ctx.prec = digits
        return str(Decimal(x.numerator) / Decimal(x.denominator))


def rational_to_dict(x: Fraction | None):
    if x is None:
        return None
    x = Fraction(x)
    return {"num": x.numerator, "den": x.denominator, "decimal": decimal_display(x)}


def rational_from_dict(obj) -> Fraction | None:
    if obj is None:
        return None
    return Fraction(int(obj["num"]), int(obj["den"]))

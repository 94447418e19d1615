"""Exhaustive enumeration of matrix fibers with exact cokernel histograms.

Every count here is a scan over a mixed-radix index space: lift digits are
laid out row-major over the varied matrix slots, the last slot changing
fastest.  The space is cut into contiguous chunks; each chunk produces a
:class:`collections.Counter` of cokernel-type codes and the counters are
merged by addition, so results do not depend on chunking or worker count.
"""

from __future__ import annotations

import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from . import ring
from .errors import BudgetExceeded, InvalidFiber
from .linalg import RingMatrix, decode_type, snf_exponents_array, type_codes
from .modtypes import (ModuleType, annihilated_by, lemma_r_count, rational_from_dict,
                       rational_to_dict, reduce_mod, theorem_rhs_count)
from .ring import RingParams

DEFAULT_BUDGET = 2**32
DEFAULT_CHUNK = 2**14

Histogram = Dict[ModuleType, int]


# ---------------------------------------------------------------------------
# specs


@dataclass(frozen=True, eq=False)
class FiberSpec:
    """All X over Z/p^{N+1} with X ≡ base_residue (mod p^residue_level)."""

    base_residue: np.ndarray
    residue_level: int

    def __post_init__(self):
        res = np.array(self.base_residue, dtype=np.int64)
        if res.ndim != 2 or res.shape[0] != res.shape[1] or res.shape[0] < 1:
            raise InvalidFiber(f"residue must be a square matrix, got shape {res.shape}")
        if self.residue_level < 1:
            raise InvalidFiber("residue level must be >= 1")
        res.setflags(write=False)
        object.__setattr__(self, "base_residue", res)

    @classmethod
    def of(cls, rows, level: int = 1) -> "FiberSpec":
        return cls(np.array(rows, dtype=np.int64), level)

    @property
    def n(self) -> int:
        return self.base_residue.shape[0]

    def check(self, params: RingParams) -> None:
        if self.residue_level > params.N + 1:
            raise InvalidFiber(f"residue level {self.residue_level} exceeds N+1={params.N + 1}")
        pk = params.p**self.residue_level
        if self.base_residue.min() < 0 or self.base_residue.max() >= pk:
            raise InvalidFiber(f"residue entries must be reduced mod p^{self.residue_level}")

    def describe(self) -> dict:
        return {"residue": self.base_residue.tolist(), "level": self.residue_level}

    def __eq__(self, other):
        return (isinstance(other, FiberSpec) and self.residue_level == other.residue_level
                and np.array_equal(self.base_residue, other.base_residue))

    def __hash__(self):
        return hash((self.residue_level, self.base_residue.tobytes()))


@dataclass(frozen=True, eq=False)
class TwistSpec:
    """Twists M_1..M_{d-1} over Z/p^N and optional second layer M'_1..M'_{d-1} over Z/p.

    The twisted pencil of Y is Y + t̄(-I + pM_1 + p^N M'_1) + Σ_{k≥2} t̄^k (pM_k + p^N M'_k).
    """

    twists: Tuple[np.ndarray, ...] = ()
    second: Optional[Tuple[np.ndarray, ...]] = None

    def __post_init__(self):
        tw = tuple(np.array(t, dtype=np.int64) for t in self.twists)
        for t in tw:
            t.setflags(write=False)
        object.__setattr__(self, "twists", tw)
        if self.second is not None:
            sec = tuple(np.array(t, dtype=np.int64) for t in self.second)
            if len(sec) != len(tw):
                raise ValueError("second twist layer must have the same length")
            object.__setattr__(self, "second", sec)

    @classmethod
    def zero(cls, params: RingParams, n: int) -> "TwistSpec":
        return cls(tuple(np.zeros((n, n), np.int64) for _ in range(params.d - 1)))

    @classmethod
    def random(cls, params: RingParams, n: int, rng: np.random.Generator,
               second_layer: bool = False) -> "TwistSpec":
        pN = params.p**params.N
        tw = tuple(rng.integers(0, pN, size=(n, n)) for _ in range(params.d - 1))
        sec = None
        if second_layer:
            sec = tuple(rng.integers(0, params.p, size=(n, n)) for _ in range(params.d - 1))
        return cls(tw, sec)

    def check(self, params: RingParams, n: int) -> None:
        if len(self.twists) != params.d - 1:
            raise ValueError(f"expected {params.d - 1} twist matrices, got {len(self.twists)}")
        for t in self.twists + (self.second or ()):
            if t.shape != (n, n):
                raise ValueError(f"twist matrix of shape {t.shape}, expected {(n, n)}")

    def coefficient_matrices(self, params: RingParams) -> list:
        """[pM_k + p^N M'_k mod p^{N+1} for k = 1..d-1]."""
        m, p, pN = params.modulus, params.p, params.p**params.N
        out = []
        for k, Mk in enumerate(self.twists):
            C = p * Mk
            if self.second is not None:
                C = C + pN * self.second[k]
            out.append(C % m)
        return out

    def is_zero(self) -> bool:
        return all(not t.any() for t in self.twists + (self.second or ()))

    def describe(self) -> dict:
        return {"twists": [t.tolist() for t in self.twists],
                "second": None if self.second is None else [t.tolist() for t in self.second]}


def pencil_array(Y: np.ndarray, params: RingParams,
                 twist: Optional[TwistSpec] = None) -> np.ndarray:
    """Coefficient array of the (twisted) pencil Y - t̄I + Σ t̄^k C_k, for Y of shape (..., n, n)."""
    Y = np.asarray(Y, dtype=np.int64)
    n = Y.shape[-1]
    m = params.modulus
    out = np.zeros(Y.shape + (params.d,), dtype=np.int64)
    out[..., 0] = Y
    t = ring.tbar(params)
    diag = np.arange(n)
    for c, tc in enumerate(t):
        out[..., diag, diag, c] -= tc
    if twist is not None:
        for k, C in enumerate(twist.coefficient_matrices(params), start=1):
            out[..., k] += C
    return out % m


# ---------------------------------------------------------------------------
# reports


@dataclass
class CountReport:
    """Exact count of one fiber scan against a closed form.

    ``matched`` is None for vacuous fibers (the residue cannot produce G) and
    for counts without a formula.
    """

    count: int
    formula_value: Optional[Fraction]
    matched: Optional[bool]
    config: dict
    enumerated_total: int
    vacuous: bool = False
    elapsed_ms: float = field(default=0.0, compare=False)

    def to_dict(self, timing: bool = True) -> dict:
        out = {
            "count": self.count,
            "formula_value": rational_to_dict(self.formula_value),
            "matched": "vacuous" if self.vacuous and self.matched is None else self.matched,
            "vacuous": self.vacuous,
            "config": self.config,
            "enumerated_total": self.enumerated_total,
        }
        if timing:
            out["elapsed_ms"] = round(self.elapsed_ms, 3)
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "CountReport":
        matched = obj["matched"]
        return cls(count=obj["count"], formula_value=rational_from_dict(obj["formula_value"]),
                   matched=None if matched in ("vacuous", None) else bool(matched),
                   config=obj["config"], enumerated_total=obj["enumerated_total"],
                   vacuous=obj.get("vacuous", False), elapsed_ms=obj.get("elapsed_ms", 0.0))


def _evaluate(count: int, formula: Optional[Fraction], vacuous: bool, strict: bool):
    if vacuous:
        return (count == 0) if strict else None
    if formula is None:
        return None
    return formula.denominator == 1 and formula.numerator == count


# ---------------------------------------------------------------------------
# engine


@dataclass(frozen=True, eq=False)
class LiftProblem:
    """Scan base_j + scale * E over all digit arrays E with entries in [0, radix).

    ``digit_shape`` is (n, n) to vary only the constant coefficient (lifts of
    an integer matrix) or (n, n, d) to vary every coefficient (lifts in R).
    Each component j is an R-matrix problem over ``rings[j]``; the histogram
    key is the tuple of cokernel-type codes, one per component.
    """

    rings: Tuple[RingParams, ...]
    bases: Tuple[np.ndarray, ...]
    digit_shape: Tuple[int, ...]
    radix: int
    scale: int

    @property
    def n(self) -> int:
        return self.digit_shape[0]

    @property
    def slots(self) -> int:
        return int(np.prod(self.digit_shape))

    @property
    def total(self) -> int:
        return self.radix**self.slots

    def digits(self, start: int, stop: int) -> np.ndarray:
        idx = np.arange(start, stop, dtype=np.int64)
        powers = self.radix ** np.arange(self.slots - 1, -1, -1, dtype=np.int64)
        return (idx[:, None] // powers[None, :]) % self.radix

    def batches(self, start: int, stop: int):
        """The matrices of each component for indices [start, stop)."""
        E = self.digits(start, stop).reshape((stop - start,) + self.digit_shape) * self.scale
        for params, base in zip(self.rings, self.bases):
            batch = np.broadcast_to(base, (stop - start,) + base.shape).copy()
            if len(self.digit_shape) == 2:
                batch[..., 0] += E
            else:
                batch += E
            yield params, batch % params.modulus

    def codes(self, start: int, stop: int) -> np.ndarray:
        """Per-index joint codes, shape (stop-start, components)."""
        cols = [type_codes(snf_exponents_array(b, params), params)
                for params, b in self.batches(start, stop)]
        return np.stack(cols, axis=1)


def _histogram_chunk(problem: LiftProblem, start: int, stop: int) -> Counter:
    codes = problem.codes(start, stop)
    keys, counts = np.unique(codes, axis=0, return_counts=True)
    return Counter({tuple(int(x) for x in key): int(c) for key, c in zip(keys, counts)})


def _chunk_job(args):
    return _histogram_chunk(*args)


def run_histogram(problem: LiftProblem, budget: int = DEFAULT_BUDGET, workers: int = 1,
                  chunk: int = DEFAULT_CHUNK) -> Counter:
    total = problem.total
    if total > budget:
        raise BudgetExceeded(total, budget)
    jobs = [(problem, s, min(s + chunk, total)) for s in range(0, total, chunk)]
    merged = Counter()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_chunk_job, jobs):
                merged.update(part)
    else:
        for job in jobs:
            merged.update(_chunk_job(job))
    return merged


def _decode_hist(raw: Counter, problem: LiftProblem) -> dict:
    n = problem.n
    out = {}
    for key, c in raw.items():
        types = tuple(decode_type(code, n, params) for code, params in zip(key, problem.rings))
        out[types] = out.get(types, 0) + c
    return out


def _single(hist: dict) -> Histogram:
    return dict(sorted(((k[0], v) for k, v in hist.items())))


def _fiber_problem(fiber: FiberSpec, params: RingParams,
                   twist: Optional[TwistSpec] = None) -> LiftProblem:
    fiber.check(params)
    if twist is not None:
        twist.check(params, fiber.n)
    k = fiber.residue_level
    base = pencil_array(fiber.base_residue, params, twist)
    return LiftProblem((params,), (base,), (fiber.n, fiber.n), params.p ** (params.N + 1 - k),
                       params.p**k)


def fiber_histogram(fiber: FiberSpec, params: RingParams, twist: Optional[TwistSpec] = None,
                    budget: int = DEFAULT_BUDGET, workers: int = 1) -> Histogram:
    """R-module types of the (twisted) pencil over every lift in the fiber."""
    problem = _fiber_problem(fiber, params, twist)
    return _single(_decode_hist(run_histogram(problem, budget, workers), problem))


def fiber_pencil_codes(fiber: FiberSpec, params: RingParams,
                       twist: Optional[TwistSpec] = None) -> np.ndarray:
    """Per-lift type codes in enumeration order (for element-wise comparisons)."""
    problem = _fiber_problem(fiber, params, twist)
    return problem.codes(0, problem.total)[:, 0]


def fiber_lifts(fiber: FiberSpec, params: RingParams) -> np.ndarray:
    """All lifts of the fiber in enumeration order, shape (L, n, n)."""
    fiber.check(params)
    k = fiber.residue_level
    problem = LiftProblem((params.base(),), (fiber.base_residue[..., None],),
                          (fiber.n, fiber.n), params.p ** (params.N + 1 - k), params.p**k)
    return next(problem.batches(0, problem.total))[1][..., 0]


def residue_type(fiber: FiberSpec, params: RingParams) -> ModuleType:
    """R/pR-type of cok(P(X̄)) for the residue of the fiber mod p."""
    F = params.residue_field()
    base = pencil_array(fiber.base_residue % params.p, F)
    return decode_type(type_codes(snf_exponents_array(base[None], F), F)[0], fiber.n, F)


def is_valid_residue(fiber: FiberSpec, G: ModuleType, params: RingParams) -> bool:
    return residue_type(fiber, params) == reduce_mod(G, 1)


def _config(params: RingParams, fiber=None, G=None, twist=None, **extra) -> dict:
    out = params.describe()
    if fiber is not None:
        out["n"] = fiber.n
        out["fiber"] = fiber.describe()
    if G is not None:
        out["G"] = list(G.parts)
    if twist is not None:
        out["twist"] = twist.describe()
    out.update(extra)
    return out


def count_poly_cokernel_fiber(fiber: FiberSpec, G: ModuleType, params: RingParams,
                              strict: bool = False, budget: int = DEFAULT_BUDGET,
                              workers: int = 1) -> CountReport:
    """Number of X ≡ X̄ (mod p) with cok(P(X)) ≅ G, compared against the closed form."""
    if fiber.residue_level != 1:
        raise InvalidFiber("count_poly_cokernel_fiber expects a mod-p fiber")
    t0 = time.perf_counter()
    hist = fiber_histogram(fiber, params, budget=budget, workers=workers)
    count = hist.get(G, 0)
    formula = theorem_rhs_count(G, params, fiber.n) if annihilated_by(G, params.N) else None
    vacuous = not is_valid_residue(fiber, G, params)
    return CountReport(count, formula, _evaluate(count, formula, vacuous, strict),
                       _config(params, fiber, G), sum(hist.values()), vacuous,
                       (time.perf_counter() - t0) * 1e3)


def count_twisted_fiber(fiber: FiberSpec, twist: TwistSpec, G: ModuleType, params: RingParams,
                        strict: bool = False, budget: int = DEFAULT_BUDGET,
                        workers: int = 1) -> CountReport:
    """Number of Y ≡ X̄ (mod p) whose twisted pencil has cokernel ≅ G."""
    t0 = time.perf_counter()
    hist = fiber_histogram(fiber, params, twist, budget=budget, workers=workers)
    count = hist.get(G, 0)
    formula = theorem_rhs_count(G, params, fiber.n) if annihilated_by(G, params.N) else None
    vacuous = not is_valid_residue(fiber, G, params)
    return CountReport(count, formula, _evaluate(count, formula, vacuous, strict),
                       _config(params, fiber, G, twist), sum(hist.values()), vacuous,
                       (time.perf_counter() - t0) * 1e3)


def count_generalized_fiber(fiber: FiberSpec, base_twist: TwistSpec, delta_twist: TwistSpec,
                            H: ModuleType, params: RingParams, budget: int = DEFAULT_BUDGET,
                            workers: int = 1) -> CountReport:
    """Lifts Y ≡ X' (mod p^N) whose pencil with twists pM_k + p^N M'_k has cokernel ≅ H.

    ``delta_twist.twists`` are the M'_k over Z/p.
    """
    if params.N < 1 or fiber.residue_level != params.N:
        raise InvalidFiber("count_generalized_fiber expects a fiber at level N >= 1")
    t0 = time.perf_counter()
    combined = TwistSpec(base_twist.twists, delta_twist.twists)
    hist = fiber_histogram(fiber, params, combined, budget=budget, workers=workers)
    count = hist.get(H, 0)
    return CountReport(count, None, None, _config(params, fiber, H, combined),
                       sum(hist.values()), False, (time.perf_counter() - t0) * 1e3)


# ---------------------------------------------------------------------------
# lifts inside Mat_n(R)


def r_lift_histogram(residue: RingMatrix, params: RingParams, budget: int = DEFAULT_BUDGET,
                     workers: int = 1) -> Histogram:
    """Types of cok_R(Z) over all Z ∈ Mat_n(R) with Z ≡ residue (mod p^k).

    ``residue`` is a square matrix over the truncation R/p^k R.
    """
    k = residue.ring.N + 1
    if residue.ring.p != params.p or residue.ring.d != params.d or k > params.N + 1:
        raise InvalidFiber("residue must live over a truncation of R")
    if residue.n_rows != residue.n_cols:
        raise InvalidFiber("residue must be square")
    n = residue.n_rows
    problem = LiftProblem((params,), (residue.data.copy(),), (n, n, params.d),
                          params.p ** (params.N + 1 - k), params.p**k)
    return _single(_decode_hist(run_histogram(problem, budget, workers), problem))


def count_R_lift_fiber(Zbar: RingMatrix, H: ModuleType, params: RingParams,
                       strict: bool = False, budget: int = DEFAULT_BUDGET,
                       workers: int = 1) -> CountReport:
    """Number of Z ∈ Mat_n(R) with Z ≡ Z̄ (mod p) and cok_R(Z) ≅ H."""
    if Zbar.ring.N != 0:
        raise InvalidFiber("Z̄ must be a matrix over the residue field")
    t0 = time.perf_counter()
    hist = r_lift_histogram(Zbar, params, budget, workers)
    count = hist.get(H, 0)
    n = Zbar.n_rows
    formula = lemma_r_count(H, params, n) if annihilated_by(H, params.N) else None
    snf_res = snf_exponents_array(Zbar.data[None], Zbar.ring)
    vacuous = decode_type(type_codes(snf_res, Zbar.ring)[0], n, Zbar.ring) != reduce_mod(H, 1)
    cfg = _config(params, G=H, n=n, residue=Zbar.to_int_rows())
    return CountReport(count, formula, _evaluate(count, formula, vacuous, strict), cfg,
                       sum(hist.values()), vacuous, (time.perf_counter() - t0) * 1e3)


# ---------------------------------------------------------------------------
# whole spaces


def _full_problem(params: RingParams, n: int) -> LiftProblem:
    base = pencil_array(np.zeros((n, n), np.int64), params)
    return LiftProblem((params,), (base,), (n, n), params.modulus, 1)


def distribution_full_space(params: RingParams, n: int, budget: int = DEFAULT_BUDGET,
                            workers: int = 1) -> Histogram:
    """Histogram of the R-type of cok(P(X)) over all of Mat_n(Z/p^{N+1})."""
    problem = _full_problem(params, n)
    return _single(_decode_hist(run_histogram(problem, budget, workers), problem))


def residue_distribution(params: RingParams, n: int, budget: int = DEFAULT_BUDGET) -> Histogram:
    """Histogram of cok(P(X̄)) over Mat_n(F_p), as F_q-module types."""
    return distribution_full_space(params.residue_field(), n, budget)


def iter_residues(p: int, n: int, level: int = 1) -> Iterable[FiberSpec]:
    """Every residue matrix mod p^level, in mixed-radix order."""
    pk = p**level
    total = pk ** (n * n)
    powers = pk ** np.arange(n * n - 1, -1, -1, dtype=np.int64)
    for idx in range(total):
        yield FiberSpec(((idx // powers) % pk).reshape(n, n), level)


def all_fiber_histograms(params: RingParams, n: int, twist: Optional[TwistSpec] = None,
                         budget: int = DEFAULT_BUDGET, workers: int = 1) -> Dict[FiberSpec, Histogram]:
    """Per-residue histograms for every mod-p residue."""
    size = params.modulus ** (n * n)
    if size > budget:
        raise BudgetExceeded(size, budget)
    return {f: fiber_histogram(f, params, twist, budget, workers) for f in iter_residues(params.p, n)}


def joint_fiber_histogram(fiber: FiberSpec, params_list: Sequence[RingParams],
                          budget: int = DEFAULT_BUDGET, workers: int = 1) -> dict:
    """Joint types (cok(P_1(X)), ..., cok(P_l(X))) over the lifts of a fiber."""
    first = params_list[0]
    for params in params_list:
        fiber.check(params)
        if (params.p, params.N) != (first.p, first.N):
            raise ValueError("all polynomials must share p and N")
    k = fiber.residue_level
    bases = tuple(pencil_array(fiber.base_residue, params) for params in params_list)
    problem = LiftProblem(tuple(params_list), bases, (fiber.n, fiber.n),
                          first.p ** (first.N + 1 - k), first.p**k)
    return dict(sorted(_decode_hist(run_histogram(problem, budget, workers), problem).items()))


def joint_residue_types(fiber: FiberSpec, params_list: Sequence[RingParams]) -> tuple:
    return tuple(residue_type(fiber, params) for params in params_list)

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from polycok import modtypes as mt
from polycok.modtypes import ModuleType
from polycok.ring import RingParams

M = lambda *parts: ModuleType(parts)
QUAD = RingParams(2, 1, (1, 1, 1))


def test_module_type_normalizes_and_orders():
    assert ModuleType.of([0, 1, 2, 0, 1]) == M(2, 1, 1)
    with pytest.raises(ValueError):
        ModuleType((1, 2))
    with pytest.raises(ValueError):
        ModuleType((0,))
    assert sorted([M(2), M(1, 1), M(), M(1)]) == [M(), M(1), M(2), M(1, 1)]
    assert M(2, 1).length == 3


@pytest.mark.parametrize("text,expected", [("2,1,1", M(2, 1, 1)), ("", M()), ("[]", M()),
                                           ("1, 2", M(2, 1))])
def test_parse_partition(text, expected):
    assert mt.parse_partition(text) == expected


def test_parse_partition_rejects_garbage():
    with pytest.raises(ValueError):
        mt.parse_partition("a,b")


def test_reduce_mod_and_annihilator():
    G = M(3, 2, 1)
    assert mt.reduce_mod(G, 1) == M(1, 1, 1)
    assert mt.reduce_mod(G, 2) == M(2, 2, 1)
    assert mt.reduce_mod(G, 0) == M()
    assert mt.annihilated_by(G, 3) and not mt.annihilated_by(G, 2)


@given(st.lists(st.integers(1, 5), max_size=5), st.integers(0, 5), st.integers(0, 5))
def test_reduce_mod_composes(parts, a, b):
    G = ModuleType.of(parts)
    assert mt.reduce_mod(mt.reduce_mod(G, a), b) == mt.reduce_mod(G, min(a, b))


def test_partitions_up_to():
    parts = mt.partitions_up_to(3)
    assert len(parts) == 1 + 1 + 2 + 3
    assert mt.partitions_up_to(2, max_part=1) == [M(), M(1), M(1, 1)]


@pytest.mark.parametrize("G,q,expected", [
    (M(1, 1), 2, 6), (M(), 5, 1), (M(2), 3, 6), (M(1), 4, 3), (M(2, 1), 2, 8),
    (M(1, 1, 1), 2, 168), (M(2, 2), 2, 96),
])
def test_aut_order_examples(G, q, expected):
    assert mt.aut_order(G, q) == expected


@pytest.mark.parametrize("r,q", [(1, 2), (2, 2), (3, 2), (2, 3), (2, 4)])
def test_aut_of_elementary_is_gl(r, q):
    assert mt.aut_order(M(*[1] * r), q) == mt.gl_order(r, q)


@pytest.mark.parametrize("q", [2, 3, 4])
@pytest.mark.parametrize("G", mt.partitions_up_to(3), ids=str)
def test_aut_order_by_images(G, q):
    if q ** G.length > 16:
        pytest.skip("image enumeration too large")
    assert mt.aut_order_by_images(G, q, budget=2**22) == mt.aut_order(G, q)


def test_bruteforce_budget():
    with pytest.raises(mt.BudgetExceeded):
        mt.aut_order_bruteforce(M(2, 2), 4, budget=100)


def test_theorem_counts():
    t = RingParams(2, 1, (0, 1))
    assert mt.theorem_rhs_count(M(1), t, 1) == 1
    assert mt.theorem_rhs_count(M(1), RingParams(3, 1, (0, 1)), 1) == 2
    assert mt.theorem_rhs_count(M(1, 1), t, 2) == 6
    assert mt.theorem_rhs_count(M(1), QUAD, 2) == 12
    assert mt.theorem_rhs_count(M(1), RingParams(2, 1, (1, 1, 0, 1)), 3) == 448
    assert mt.theorem_rhs_count(M(2), RingParams(2, 2, (0, 1)), 2) == 64
    with pytest.raises(ValueError):
        mt.theorem_rhs_count(M(2), t, 1)


@pytest.mark.parametrize("params", [RingParams(2, 1, (0, 1)), QUAD, RingParams(3, 2, (1, 0, 1))],
                         ids=str)
@pytest.mark.parametrize("n", [1, 2, 3])
def test_probability_is_count_over_space(params, n):
    for G in mt.partitions_up_to(2, max_part=params.N):
        count = mt.theorem_rhs_count(G, params, n)
        prob = mt.theorem_rhs_probability(G, params, n)
        assert prob == count / Fraction(params.modulus ** (n * n))


def test_fw_rhs_matches_degree_one():
    for p in (2, 3):
        params = RingParams(p, 2, (p**3 - 1, 1))
        for n in (1, 2):
            for G in mt.partitions_up_to(2):
                assert mt.fw_rhs(G, p, n) == mt.theorem_rhs_probability(G, params, n)


def test_lemma_r_count_example():
    # q^{N n^2} · q · (1 - 1/q)^2 / (q - 1) at q = 4
    assert mt.lemma_r_count(M(1), QUAD, 1) == 3


def test_conjecture_single_polynomial_reduces():
    for G in (M(), M(1), M(1, 1)):
        t = RingParams(2, 1, (0, 1))
        assert mt.conjecture_rhs_count([G], [t], 2) == mt.theorem_rhs_count(G, t, 2)


def test_cohen_lenstra_limit_sums_below_one():
    total = sum(mt.cohen_lenstra_limit(G, 2, 64) for G in mt.partitions_up_to(6))
    assert Fraction(9, 10) < total < 1


def test_rational_dict_round_trip():
    x = Fraction(-7, 12)
    d = mt.rational_to_dict(x)
    assert d == {"num": -7, "den": 12, "decimal": "-0.583333333333"}
    assert mt.rational_from_dict(d) == x
    assert mt.rational_to_dict(None) is None

import json

import numpy as np
import pytest

from polycok import enumeration as en
from polycok import harness as h
from polycok.errors import NoWitness
from polycok.modtypes import ModuleType, partitions_up_to
from polycok.ring import RingParams

M = lambda *parts: ModuleType(parts)
T2 = RingParams(2, 1, (0, 1))
QUAD = RingParams(2, 1, (1, 1, 1))
CUBIC = RingParams(2, 1, (1, 1, 0, 1))


def failures(res):
    return [a for a in res.assertions if not a.passed]


def test_theorem_main_examples():
    for params, n, G, count in [(T2, 2, M(1, 1), 6), (QUAD, 2, M(1), 12),
                                (RingParams(2, 2, (0, 1)), 2, M(2), 64)]:
        res = h.verify_theorem_main(params, n, G)
        assert res.overall_pass, failures(res)
        assert res.notes["per_fiber_counts"] == [count]


def test_theorem_main_explicit_fibers_include_vacuous():
    fibers = [en.FiberSpec.of([[0, 1], [1, 1]]), en.FiberSpec.of([[0, 0], [0, 0]])]
    res = h.verify_theorem_main(QUAD, 2, M(1), fibers)
    assert res.overall_pass
    assert res.notes["valid_fibers"] == 1


def test_theorem_main_rejects_unannihilated():
    with pytest.raises(ValueError):
        h.verify_theorem_main(T2, 1, M(2))


def test_theorem_main_without_valid_residue_fails():
    # rank of cok(P(X̄)) over F_8 is at most n/d, so n = 2 has no residue of type [1]
    res = h.verify_theorem_main(CUBIC, 2, M(1))
    assert not res.overall_pass


def test_lee_gate_refuses(monkeypatch):
    monkeypatch.setattr(h, "lee_mismatches", lambda X, params: (len(X), 1, []))
    monkeypatch.setattr(h, "LEE_GATE_BUDGET", 0)
    res = h.verify_theorem_main(QUAD, 2, M(1))
    assert not res.overall_pass
    assert res.notes["refused"]
    assert len(res.assertions) == 1


def test_lemma_lee():
    res = h.verify_lemma_lee(QUAD, 2)
    assert res.overall_pass
    assert res.assertions[0].actual == 256
    assert h.verify_lemma_lee(RingParams(3, 1, (1, 0, 1)), 1).overall_pass
    with pytest.raises(en.BudgetExceeded):
        h.verify_lemma_lee(CUBIC, 3, budget=100)


@pytest.mark.parametrize("p", [2, 3])
@pytest.mark.parametrize("n", [1, 2])
def test_fw_case_small_partitions(p, n):
    for G in partitions_up_to(2):
        if len(G) > n:
            continue
        N = max(G.parts, default=1)
        if p == 3 and n == 2:
            fibers = [next(f for f in en.iter_residues(p, n)
                           if en.is_valid_residue(f, G, h.fw_params(p, N)))]
        else:
            fibers = "all"
        res = h.verify_fw_case(p, n, N, G, fibers)
        assert res.overall_pass, (G, failures(res))


def test_lemma_final_quadratic_covers_top_part():
    res = h.verify_lemma_final(QUAD, 2, M(1), sample_twists=20, seed=1)
    assert res.overall_pass, failures(res)
    assert 12 in res.notes["H_counts"]
    res2 = h.verify_lemma_final(QUAD, 2, M(2), sample_twists=5, seed=2)
    assert res2.overall_pass


def test_lemma_final_needs_degree_two():
    with pytest.raises(ValueError):
        h.verify_lemma_final(T2, 1, M(1))


def test_final1_map_variants():
    for params, n in [(QUAD, 2), (CUBIC, 2), (RingParams(2, 2, (1, 1, 1)), 1)]:
        res = h.verify_final1_map(params, n, sample=3, seed=0)
        assert res.overall_pass, failures(res)


def test_final1_map_zero_second_layer_is_identity():
    Y = np.arange(8).reshape(2, 2, 2) % 4
    zero = [np.zeros((2, 2), np.int64)]
    assert (h.final1_map(Y, zero, QUAD) == Y).all()


def test_final1_map_detects_broken_map(monkeypatch):
    monkeypatch.setattr(h, "final1_map", lambda Y, second, params: Y * 0)
    res = h.verify_final1_map(QUAD, 2, sample=1, seed=0)
    assert not res.overall_pass


def test_lemma_final3():
    res = h.verify_lemma_final3(QUAD, 2, M(1), pairs=6, seed=3)
    assert res.overall_pass, failures(res)
    with pytest.raises(NoWitness):
        h.verify_lemma_final3(QUAD, 1, M(1, 1))


def test_lemma_r_and_corollaries():
    assert h.verify_lemma_r(QUAD, 1, M(1)).overall_pass
    assert h.verify_lemma_r(QUAD, 2, M(1, 1)).overall_pass
    for n in (1, 2):
        res = h.verify_corollary_final2(QUAD, n)
        assert res.overall_pass and res.config["mode"] == "exhaustive"
    assert h.verify_corollary_final2(CUBIC, 1, max_pairs=4).config["mode"] == "sampled"
    assert h.verify_corollary_final4(QUAD, 2, M(1), samples=8).overall_pass


def test_geo_identity():
    for params, n, G in [(QUAD, 2, M(1)), (QUAD, 2, M()), (T2, 1, M(1))]:
        res = h.verify_geo_identity(params, n, G)
        assert res.overall_pass, failures(res)
    assert h.verify_geo_identity(T2, 1, M(1)).notes["full_count"] == 1


def test_conjecture_is_evidence():
    res = h.explore_conjecture([T2, RingParams(2, 1, (3, 1))], 2, [M(1), M()])
    assert res.evidence
    assert res.notes["agreement"]
    with pytest.raises(ValueError):
        h.explore_conjecture([T2, RingParams(2, 1, (2, 1))], 2, [M(1), M()])


def test_conjecture_single_polynomial_matches_theorem():
    conj = h.explore_conjecture([QUAD], 2, [M(1)])
    thm = h.verify_theorem_main(QUAD, 2, M(1))
    assert conj.notes["per_fiber_counts"] == thm.notes["per_fiber_counts"]


def test_determinism_and_serialization():
    a = h.verify_lemma_final(QUAD, 2, M(1), sample_twists=4, seed=9)
    b = h.verify_lemma_final(QUAD, 2, M(1), sample_twists=4, seed=9)
    assert a.to_dict(timing=False) == b.to_dict(timing=False)
    text = json.dumps(a.to_dict())
    back = h.ExperimentResult.from_dict(json.loads(text))
    assert json.dumps(back.to_dict()) == text
    assert back.overall_pass == a.overall_pass


def test_renderers():
    res = h.verify_theorem_main(QUAD, 2, M(1))
    md = h.render_markdown([res])
    assert md.startswith("## theorem-main: PASS")
    assert "| assertion | expected | actual | pass |" in md
    csv_text = h.render_csv([res])
    assert csv_text.splitlines()[0] == "experiment,status,description,expected,actual,pass"
    assert len(csv_text.splitlines()) == len(res.assertions) + 1


def test_ch_table_reports_limit():
    res = h.ch_table(T2, M(), ns=(1, 2))
    assert res.evidence
    rows = res.notes["rows"]
    assert rows[0]["probability"] == 0.5
    assert res.notes["limit_decimal"].startswith("0.2887")

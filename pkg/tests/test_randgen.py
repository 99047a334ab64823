import json

import pytest

from cmoment.poly import exponent_degree
from cmoment.randgen import random_cpop


def test_block_count_ten():
    cpop = random_cpop(10, seed=42)
    assert cpop.n == 55
    assert len(cpop.ineqs) == 10
    assert not cpop.eqs


def test_single_block_shape():
    cpop = random_cpop(1, seed=7)
    assert cpop.n == 10
    assert len(cpop.ineqs) == 1
    assert len(cpop.objective.terms) == 40
    assert cpop.objective.is_hermitian()
    assert cpop.objective.degree() <= 4
    # admissible at order 2: every one-sided degree at most 2
    assert cpop.objective.one_sided_degree() <= 2
    # no diagonal terms by construction
    assert all(b != g for b, g in cpop.objective.terms)


def test_window_term_counts():
    cpop = random_cpop(3, seed=9)
    # 40 terms per window piece, supports confined to the window
    assert len(cpop.objective.terms) == 3 * 40
    for j, g in enumerate(cpop.ineqs):
        window = set(range(5 * j, 5 * j + 10))
        assert g.variables() <= window


def test_deterministic_under_seed(tmp_path):
    a = random_cpop(2, seed=123)
    b = random_cpop(2, seed=123)
    pa, pb = tmp_path / "a.json", tmp_path / "b.json"
    a.save(str(pa))
    b.save(str(pb))
    assert pa.read_bytes() == pb.read_bytes()


def test_seeds_differ():
    a = random_cpop(1, seed=1)
    b = random_cpop(1, seed=2)
    assert a.objective != b.objective


def test_rejects_bad_block_count():
    with pytest.raises(ValueError):
        random_cpop(0, seed=0)

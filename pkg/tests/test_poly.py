import math

import numpy as np
import pytest

from cmoment.poly import (
    CPOP, Poly, ball_constraint, canonical_pair, monomial_basis, unit_exponent,
)

from _helpers import brute_force_basis, random_hermitian_poly


class TestMonomialBasis:
    def test_single_variable(self):
        assert monomial_basis(1, 2) == [(0,), (1,), (2,)]

    def test_two_variables_degree_two(self):
        basis = monomial_basis(2, 2)
        assert len(basis) == 6
        assert set(basis) == {(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (2, 0)}
        assert basis == sorted(basis)

    def test_five_variables_counts_against_enumeration(self):
        basis = monomial_basis(5, 2)
        oracle = brute_force_basis(5, 2)
        assert len(basis) == 21
        assert basis == oracle

    @pytest.mark.parametrize("n", range(1, 9))
    @pytest.mark.parametrize("d", range(5))
    def test_cardinality(self, n, d):
        assert len(monomial_basis(n, d)) == math.comb(n + d, d)

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            monomial_basis(0, 2)
        with pytest.raises(ValueError):
            monomial_basis(2, -1)


class TestConjugate:
    def test_hermitian_fixed_point(self):
        p = Poly.variable(1, 0) + Poly.conj_variable(1, 0)
        assert p.conjugate() == p

    def test_definition(self):
        n = 2
        e1, e2 = unit_exponent(n, 0), unit_exponent(n, 1)
        p = Poly(n, {(e1, e2): 1j})
        q = p.conjugate()
        assert q.terms == {(e2, e1): -1j}

    def test_involution(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            n = int(rng.integers(1, 4))
            terms = {}
            for _ in range(5):
                b = tuple(rng.integers(0, 3, n))
                g = tuple(rng.integers(0, 3, n))
                terms[(b, g)] = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
            p = Poly(n, terms)
            assert p.conjugate().conjugate() == p


class TestIsHermitian:
    def test_ball(self):
        assert ball_constraint(1, [0]).is_hermitian()

    def test_plain_variable_is_not(self):
        assert not Poly.variable(1, 0).is_hermitian()

    def test_conjugate_pair(self):
        n = 2
        e1, e2 = unit_exponent(n, 0), unit_exponent(n, 1)
        p = Poly(n, {(e1, e2): 1.0, (e2, e1): 1.0})
        assert p.is_hermitian()


class TestEvaluate:
    def test_linear(self):
        p = Poly.variable(1, 0) + Poly.conj_variable(1, 0)
        assert p.evaluate([-1.0]) == pytest.approx(-2.0)

    def test_ball_boundary(self):
        p = ball_constraint(2, [0, 1])
        assert abs(p.evaluate([1.0, 0.0])) < 1e-15

    def test_hermitian_real_valued(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            n = int(rng.integers(1, 4))
            p = random_hermitian_poly(n, rng, n_terms=6, max_side=2)
            z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            v = p.evaluate(z)
            assert abs(v.imag) <= 1e-12 * (1 + abs(v))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            Poly.variable(2, 0).evaluate([1.0])


class TestDegrees:
    def test_half_degrees(self):
        assert ball_constraint(2, [0, 1]).half_degree() == 1
        quartic = Poly(2, {((2, 0), (0, 2)): 1.0, ((0, 2), (2, 0)): 1.0})
        assert quartic.half_degree() == 2
        assert Poly.constant(2, 1.0).half_degree() == 0

    def test_zero_polynomial_rejected(self):
        with pytest.raises(ValueError):
            Poly.zero(2).half_degree()


class TestHermitianClosureUnderOps:
    def test_add_mul_scale(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            n = 2
            p = random_hermitian_poly(n, rng, n_terms=4, max_side=1)
            q = random_hermitian_poly(n, rng, n_terms=4, max_side=1)
            assert (p + q).is_hermitian()
            assert (p * q).is_hermitian()
            assert (rng.uniform(-2, 2) * p).is_hermitian()


class TestCanonicalPair:
    def test_ordering(self):
        b, g = (1, 0), (0, 1)
        assert canonical_pair(b, g) == ((0, 1), (1, 0))
        assert canonical_pair(g, b) == ((0, 1), (1, 0))


class TestCPOP:
    def test_d_min(self):
        n = 2
        f = Poly.variable(n, 0) + Poly.conj_variable(n, 0)
        cpop = CPOP(n=n, objective=f, ineqs=[ball_constraint(n, [0, 1])])
        assert cpop.d_min == 1
        quartic = f + Poly(n, {((2, 0), (0, 2)): 1.0, ((0, 2), (2, 0)): 1.0})
        cpop2 = CPOP(n=n, objective=quartic, ineqs=[ball_constraint(n, [0, 1])])
        assert cpop2.d_min == 2

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            CPOP(n=1, objective=Poly.variable(1, 0))

    def test_json_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        f = random_hermitian_poly(2, rng, n_terms=4, max_side=2)
        h = ball_constraint(2, [0]) - ball_constraint(2, [1])
        cpop = CPOP(n=2, objective=f, ineqs=[ball_constraint(2, [0, 1])], eqs=[h])
        path = tmp_path / "model.json"
        cpop.save(str(path))
        back = CPOP.load(str(path))
        assert back.n == cpop.n
        assert back.objective == cpop.objective
        assert back.ineqs == cpop.ineqs
        assert back.eqs == cpop.eqs

    def test_loader_rejects_hermitian_violation(self, tmp_path):
        import json
        data = {
            "n": 1,
            "objective": [{"beta": [1], "gamma": [0], "re": 1.0, "im": 0.0}],
            "ineq": [],
            "eq": [],
        }
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(data))
        with pytest.raises(ValueError, match="Hermitian"):
            CPOP.load(str(path))

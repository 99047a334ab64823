import math

import numpy as np
import pytest

from cmoment import acopf
from cmoment import sparsity as sp
from cmoment.relax import complex_to_real
from cmoment.solver import SolverSettings, solve

from _helpers import eval_real

CASE_DIR = "tests/data/pglib"


def case_path(name):
    return f"{CASE_DIR}/{name}.m"


@pytest.fixture(scope="module")
def case14():
    return acopf.load_case(case_path("pglib_opf_case14_ieee"))


@pytest.fixture(scope="module")
def case3():
    return acopf.load_case(case_path("pglib_opf_case3_lmbd"))


MINI_CASE = """
function mpc = mini2
mpc.version = '2';
mpc.baseMVA = 100.0;
mpc.bus = [
    1 3 0.0  0.0 0.0 0.0 1 1.0 0.0 1.0 1 1.1 0.9;
    2 1 50.0 10.0 0.0 0.0 1 1.0 0.0 1.0 1 1.1 0.9;
];
mpc.gen = [
    1 50.0 0.0 40.0 -40.0 1.0 100.0 1 100.0 0.0;
];
mpc.gencost = [
    2 0.0 0.0 3 0.1 10.0 0.0;
];
mpc.branch = [
    1 2 0.01 0.1 0.02 {rate} 0 0 {tap} 0.0 1 -30.0 30.0;
];
"""


class TestParser:
    def test_case14_counts(self, case14):
        assert len(case14.buses) == 14
        assert len(case14.gens) == 5
        assert len(case14.branches) == 20
        assert case14.base_mva == 100.0

    def test_per_unit_conversion(self, case14):
        bus2 = next(b for b in case14.buses if b.ident == 2)
        assert bus2.pd == pytest.approx(0.217)
        assert bus2.qd == pytest.approx(0.127)
        bus9 = next(b for b in case14.buses if b.ident == 9)
        assert bus9.bs == pytest.approx(0.19)

    def test_tap_zero_means_one(self):
        case = acopf.parse_matpower(MINI_CASE.format(rate=100, tap=0.0))
        assert case.branches[0].tap == 1.0
        case = acopf.parse_matpower(MINI_CASE.format(rate=100, tap=0.95))
        assert abs(case.branches[0].tap) == pytest.approx(0.95)

    def test_zero_impedance_rejected(self):
        text = MINI_CASE.format(rate=100, tap=0.0).replace(
            "1 2 0.01 0.1", "1 2 0.0 0.0")
        with pytest.raises(ValueError, match="singular"):
            acopf.parse_matpower(text)

    def test_zero_rate_means_unlimited(self):
        case = acopf.parse_matpower(MINI_CASE.format(rate=0, tap=0.0))
        assert case.branches[0].rate is None

    def test_multiple_generators_rejected(self):
        text = MINI_CASE.format(rate=100, tap=0.0).replace(
            "mpc.gen = [\n    1 50.0 0.0 40.0 -40.0 1.0 100.0 1 100.0 0.0;",
            "mpc.gen = [\n    1 50.0 0.0 40.0 -40.0 1.0 100.0 1 100.0 0.0;"
            "\n    1 10.0 0.0 40.0 -40.0 1.0 100.0 1 100.0 0.0;")
        text = text.replace(
            "mpc.gencost = [\n    2 0.0 0.0 3 0.1 10.0 0.0;",
            "mpc.gencost = [\n    2 0.0 0.0 3 0.1 10.0 0.0;"
            "\n    2 0.0 0.0 3 0.1 10.0 0.0;")
        with pytest.raises(ValueError, match="generator"):
            acopf.parse_matpower(text)

    def test_piecewise_cost_rejected(self):
        text = MINI_CASE.format(rate=100, tap=0.0).replace(
            "2 0.0 0.0 3 0.1 10.0 0.0;", "1 0.0 0.0 2 0.0 0.0 10.0 100.0;")
        with pytest.raises(ValueError, match="polynomial"):
            acopf.parse_matpower(text)


class TestModel:
    def test_all_polynomials_hermitian(self, case14):
        model = acopf.build_model(case14)
        assert model.cpop.objective.is_hermitian()
        for g in model.cpop.ineqs:
            assert g.is_hermitian()
        for h in model.cpop.eqs:
            assert h.is_hermitian()

    def test_global_phase_invariance(self, case14):
        # every monomial must balance z and conj(z) degrees, so a common
        # phase rotation leaves all constraints unchanged
        model = acopf.build_model(case14)
        polys = [model.cpop.objective] + model.cpop.ineqs + model.cpop.eqs
        for p in polys:
            for beta, gamma in p.terms:
                assert sum(beta) == sum(gamma)

    def test_case14_cliques_match_reported_block_size(self, case14):
        model = acopf.build_model(case14)
        pat = sp.min_initial_pattern(model.cpop, "min-fill", model.gen_star_cliques)
        assert pat.max_clique_size() <= 6
        sdp = acopf.shor_model(model)
        assert sdp.statistics()["mb"] == 6

    def test_flow_orders(self, case14):
        model = acopf.build_model(case14)
        pat = sp.min_initial_pattern(model.cpop, "min-fill", model.gen_star_cliques)
        orders = sp.min_relaxation_orders(model.cpop, pat)
        flow = set(model.quartic_flow_indices)
        for l, owned in enumerate(pat.assigned):
            if any(j in flow for j in owned):
                assert orders[l] == 2

    def test_feasible_point_respects_constraints(self, case3):
        # polish a feasible point locally and check the model accepts it
        from scipy.optimize import minimize
        model = acopf.build_model(case3)
        cpop = model.cpop
        n = cpop.n

        def unpack(x):
            return x[:n] + 1j * x[n:]

        cons = ([{"type": "eq", "fun": (lambda x, h=h: eval_real(h, unpack(x)))}
                 for h in cpop.eqs]
                + [{"type": "eq", "fun": lambda x: x[n]}]
                + [{"type": "ineq", "fun": (lambda x, g=g: eval_real(g, unpack(x)))}
                   for g in cpop.ineqs])
        x0 = np.concatenate([np.ones(n), np.zeros(n)])
        res = minimize(lambda x: eval_real(cpop.objective, unpack(x)), x0,
                       constraints=cons, method="SLSQP",
                       options={"maxiter": 300, "ftol": 1e-12})
        z = unpack(res.x)
        assert max(abs(eval_real(h, z)) for h in cpop.eqs) < 1e-6
        assert min(eval_real(g, z) for g in cpop.ineqs) > -1e-6
        # any relaxation bound must stay below this feasible value
        cost = eval_real(cpop.objective, z)
        rep, srep, _ = acopf.relax_and_solve(case3, order="shor")
        assert srep.pobj <= cost + 1e-6 * (1 + abs(cost))
        rep2, srep2, _ = acopf.relax_and_solve(case3, order="15")
        assert srep2.pobj <= cost + 1e-4 * (1 + abs(cost))


class TestRelaxations:
    def test_bound_chain_case3(self, case3):
        ac = 5812.6
        r1, s1, _ = acopf.relax_and_solve(case3, order="shor", ac=ac)
        r2, s2, _ = acopf.relax_and_solve(case3, order="15", ac=ac)
        assert s1.status in ("optimal", "near-optimal")
        assert s2.status in ("optimal", "near-optimal")
        assert s1.pobj <= s2.pobj + 1e-6 * (1 + abs(s2.pobj))
        assert s2.pobj <= ac * (1 + 1e-6)

    def test_epigraph_cost_lowering_present(self, case3):
        model = acopf.build_model(case3)
        sdp = acopf.shor_model(model)
        assert any(lbl.startswith("cost[") for lbl in (b.label for b in sdp.blocks))
        assert any(meta[0] == "aux" for meta in sdp.vars.meta)


class TestGap:
    def test_exact(self):
        assert acopf.optimality_gap(2178.1, 2178.1) == 0.0

    def test_case30_value(self):
        assert acopf.optimality_gap(8208.5, 7547.2) == pytest.approx(8.06, abs=0.01)

    def test_boundary_not_accepted(self):
        gap = acopf.optimality_gap(100.0, 99.0)
        assert gap == pytest.approx(1.0)
        assert not gap < 1.0

    def test_zero_ac_rejected(self):
        with pytest.raises(ValueError):
            acopf.optimality_gap(0.0, 1.0)


def test_ac_table_reader(tmp_path):
    p = tmp_path / "ac.csv"
    p.write_text("case,ac_objective\nfoo,1.5\nbar,2178.1\n")
    table = acopf.read_ac_table(str(p))
    assert table == {"foo": 1.5, "bar": 2178.1}


def test_report_dict(case3):
    report, _, _ = acopf.relax_and_solve(case3, order="shor", ac=5812.6)
    d = report.to_dict()
    assert d["case"] == "pglib_opf_case3_lmbd"
    assert d["accepted"] == (d["gap"] < 1.0)

import numpy as np
import pytest

from cmoment.poly import CPOP, Poly, ball_constraint
from cmoment.relax import RealBlock, RealSDP, RelaxOptions, assemble, complex_to_real
from cmoment.sdpa import export_sdpa, import_sdpa
from cmoment.solver import SolverSettings, solve

from _helpers import example_ball_cpop, random_ball_cpop, random_qcqp


def toy_model() -> RealSDP:
    # min x subject to x - 1 >= 0
    return RealSDP(nvar=1, c=np.array([1.0]), obj_const=0.0,
                   blocks=[RealBlock(1, {(0, 0): -1.0}, {0: {(0, 0): 1.0}}, "row")],
                   eq_rows=[], eq_rhs=[], var_meta=[("aux", "x")])


def test_golden_byte_equality(tmp_path):
    path = tmp_path / "toy.dat-s"
    export_sdpa(toy_model(), str(path), str(path) + ".json",
                comment="toy lower-bound model")
    golden = open("tests/data/golden_toy.dat-s", "rb").read()
    assert path.read_bytes() == golden


def test_toy_round_trip_solves_to_one(tmp_path):
    path = tmp_path / "toy.dat-s"
    export_sdpa(toy_model(), str(path))
    back = import_sdpa(str(path))
    rep = solve(back, SolverSettings())
    assert rep.status == "optimal"
    assert rep.pobj == pytest.approx(1.0, abs=1e-7)


def _structurally_equal(a: RealSDP, b: RealSDP) -> bool:
    if a.nvar != b.nvar or abs(a.obj_const - b.obj_const) > 0:
        return False
    if not np.array_equal(a.c, b.c):
        return False
    if len(a.blocks) != len(b.blocks):
        return False
    for x, y in zip(a.blocks, b.blocks):
        if x.dim != y.dim or x.f0 != y.f0 or x.mats != y.mats:
            return False
    return a.eq_rows == b.eq_rows and a.eq_rhs == b.eq_rhs


def _models_for_round_trip():
    rng = np.random.default_rng(17)
    n2 = 2
    h = Poly(n2, {((1, 0), (1, 0)): 1.0}) - Poly.constant(n2, 0.5)
    eq_model = CPOP(n=n2,
                    objective=Poly.variable(n2, 0) + Poly.conj_variable(n2, 0),
                    ineqs=[ball_constraint(n2, [0, 1])], eqs=[h])
    cases = [
        (example_ball_cpop(), RelaxOptions(order=2, sparsity="dense")),
        (example_ball_cpop(), RelaxOptions(order=2, sparsity="ts", k="auto")),
        (eq_model, RelaxOptions(order=2, sparsity="dense")),
        (random_qcqp(3, rng), RelaxOptions(order=1, sparsity="dense")),
        (random_ball_cpop(3, rng), RelaxOptions(order=2, sparsity="cs-ts", k=1)),
    ]
    return [complex_to_real(assemble(c, o)) for c, o in cases]


def test_round_trip_five_models(tmp_path):
    for i, real in enumerate(_models_for_round_trip()):
        path = tmp_path / f"model{i}.dat-s"
        export_sdpa(real, str(path))
        back = import_sdpa(str(path))
        assert _structurally_equal(real, back)
        a = solve(real, SolverSettings())
        b = solve(back, SolverSettings())
        assert a.pobj == pytest.approx(b.pobj, rel=1e-7, abs=1e-9)


def test_equalities_become_paired_inequalities(tmp_path):
    n = 2
    h = Poly(n, {((1, 0), (1, 0)): 1.0}) - Poly.constant(n, 0.5)
    cpop = CPOP(n=n, objective=Poly.variable(n, 0) + Poly.conj_variable(n, 0),
                ineqs=[ball_constraint(n, [0, 1])], eqs=[h])
    real = complex_to_real(assemble(cpop, RelaxOptions(order=1, sparsity="dense")))
    assert real.eq_rows
    path = tmp_path / "eq.dat-s"
    export_sdpa(real, str(path))
    text = open(path).read()
    import json
    side = json.load(open(str(path) + ".json"))
    plus = [it for it in side["diag_layout"] if it[0] == "eq" and it[2] == "+"]
    minus = [it for it in side["diag_layout"] if it[0] == "eq" and it[2] == "-"]
    assert len(plus) == len(minus) == len(real.eq_rows)
    back = import_sdpa(str(path))
    assert back.eq_rows == real.eq_rows
    assert back.eq_rhs == real.eq_rhs


def test_deterministic_bytes(tmp_path):
    real = _models_for_round_trip()[0]
    p1, p2 = tmp_path / "a.dat-s", tmp_path / "b.dat-s"
    export_sdpa(real, str(p1))
    export_sdpa(real, str(p2))
    assert p1.read_bytes() == p2.read_bytes()

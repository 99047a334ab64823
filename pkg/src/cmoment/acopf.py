"""AC optimal power flow front end.

Parses Matpower-style case files, eliminates the generator power variables
to obtain a voltage-only polynomial problem, and assembles either Shor's
relaxation (first order, with flow limits lowered to second-order-cone
blocks and quadratic costs lowered through an epigraph scalar) or the
minimum-initial-order relaxation (the "1.5th order": per-clique orders,
term-sparsified blocks, flow limits kept quartic).
"""

from __future__ import annotations

import math
import re
import time
from dataclasses import dataclass, field

from .poly import CPOP, Poly, unit_exponent
from .relax import ComplexSDP, ModelBuilder, RelaxOptions, assemble, complex_to_real
from .solver import SolverSettings, SolveReport, solve
from . import sparsity as sp


# ---------------------------------------------------------------------------
# case parsing
# ---------------------------------------------------------------------------


@dataclass
class Bus:
    ident: int
    pd: float
    qd: float
    gs: float
    bs: float
    vmin: float
    vmax: float


@dataclass
class Gen:
    bus: int
    pmin: float
    pmax: float
    qmin: float
    qmax: float
    c2: float
    c1: float
    c0: float


@dataclass
class Branch:
    f: int
    t: int
    y: complex              # series admittance 1/(r + jx)
    bc: float               # total charging susceptance
    tap: complex            # tap * exp(j shift)
    rate: float | None      # per-unit apparent power limit, None = unlimited
    angmin: float | None    # radians, None = non-binding
    angmax: float | None


@dataclass
class NetworkCase:
    name: str
    base_mva: float
    buses: list[Bus]
    gens: list[Gen]
    branches: list[Branch]

    @property
    def n(self) -> int:
        return len(self.buses)


def _extract_matrix(text: str, name: str) -> list[list[float]]:
    m = re.search(rf"mpc\.{name}\s*=\s*\[(.*?)\];", text, re.S)
    if m is None:
        raise ValueError(f"case file is missing matrix mpc.{name}")
    rows = []
    for raw in m.group(1).split(";"):
        raw = raw.strip()
        if not raw:
            continue
        rows.append([float(t) for t in raw.split()])
    return rows


def parse_matpower(text: str, name: str = "case") -> NetworkCase:
    """Parse the bus/gen/branch/gencost matrices into per-unit data.

    Enforces the single-generator-per-bus assumption, rejects non-polynomial
    or above-quadratic cost models and zero-impedance branches.  A tap of 0
    means 1 (Matpower convention); a flow limit of 0 means unconstrained.
    """
    # strip matlab comments before matching matrices
    text = "\n".join(line.split("%")[0] for line in text.splitlines())
    mb = re.search(r"mpc\.baseMVA\s*=\s*([0-9.eE+-]+)\s*;", text)
    if mb is None:
        raise ValueError("case file is missing mpc.baseMVA")
    base = float(mb.group(1))

    bus_rows = _extract_matrix(text, "bus")
    gen_rows = _extract_matrix(text, "gen")
    branch_rows = _extract_matrix(text, "branch")
    cost_rows = _extract_matrix(text, "gencost")
    if len(cost_rows) != len(gen_rows):
        raise ValueError("gencost rows do not match gen rows")

    buses = []
    for r in bus_rows:
        buses.append(Bus(
            ident=int(r[0]), pd=r[2] / base, qd=r[3] / base,
            gs=r[4] / base, bs=r[5] / base, vmax=r[11], vmin=r[12]))
        if buses[-1].vmin > buses[-1].vmax:
            raise ValueError(f"bus {buses[-1].ident}: vmin exceeds vmax")

    gens = []
    seen_bus: set[int] = set()
    for r, cr in zip(gen_rows, cost_rows):
        if len(r) > 7 and r[7] == 0:
            continue
        bus = int(r[0])
        if bus in seen_bus:
            raise ValueError(
                f"bus {bus} has more than one active generator; "
                "cases must have at most one generator per bus")
        seen_bus.add(bus)
        model, ncost = int(cr[0]), int(cr[3])
        if model != 2:
            raise ValueError("only polynomial (model 2) generator costs are supported")
        coeffs = cr[4:4 + ncost]
        if len(coeffs) > 3 and any(abs(v) > 0 for v in coeffs[:-3]):
            raise ValueError("generator cost degree above 2 is not supported")
        coeffs = coeffs[-3:] if len(coeffs) >= 3 else [0.0] * (3 - len(coeffs)) + list(coeffs)
        c2, c1, c0 = coeffs
        gens.append(Gen(
            bus=bus, pmax=r[8] / base, pmin=r[9] / base,
            qmax=r[3] / base, qmin=r[4] / base,
            c2=c2 * base * base, c1=c1 * base, c0=c0))

    branches = []
    for r in branch_rows:
        if len(r) > 10 and r[10] == 0:
            continue
        rr, xx = r[2], r[3]
        if rr == 0.0 and xx == 0.0:
            raise ValueError(f"branch {int(r[0])}-{int(r[1])}: singular admittance (r = x = 0)")
        tap_mag = r[8] if r[8] != 0.0 else 1.0
        shift = math.radians(r[9])
        rate = r[5] / base if r[5] > 0 else None
        angmin = math.radians(r[11])
        angmax = math.radians(r[12])
        branches.append(Branch(
            f=int(r[0]), t=int(r[1]), y=1.0 / complex(rr, xx), bc=r[4],
            tap=tap_mag * complex(math.cos(shift), math.sin(shift)),
            rate=rate,
            angmin=angmin if angmin > -math.pi / 2 else None,
            angmax=angmax if angmax < math.pi / 2 else None))

    return NetworkCase(name=name, base_mva=base, buses=buses, gens=gens,
                       branches=branches)


def load_case(path: str) -> NetworkCase:
    with open(path) as f:
        text = f.read()
    name = re.search(r"function\s+mpc\s*=\s*(\w+)", text)
    return parse_matpower(text, name.group(1) if name else path)


# ---------------------------------------------------------------------------
# voltage-only polynomial model
# ---------------------------------------------------------------------------


@dataclass
class FlowLimit:
    label: str
    su: float
    flow: Poly        # the complex (non-Hermitian) power-flow expression
    ineq_index: int   # index of the quartic constraint inside the CPOP
    current_row: Poly = None  # quadratic current-limit lowering for Shor


@dataclass
class CostTerm:
    label: str
    c2: float
    c1: float
    c0: float
    re_power: Poly    # Re of the eliminated generation expression


@dataclass
class AcopfModel:
    case: NetworkCase
    cpop: CPOP
    bus_pos: dict[int, int]
    flow_limits: list[FlowLimit]
    cost_terms: list[CostTerm]
    gen_star_cliques: list[tuple[int, ...]]

    @property
    def quartic_flow_indices(self) -> list[int]:
        return [fl.ineq_index for fl in self.flow_limits]


def _flow_expressions(case: NetworkCase, pos: dict[int, int]) -> list[tuple[Poly, Poly]]:
    """Per branch: (from-side, to-side) complex power flow polynomials."""
    n = case.n
    out = []
    for br in case.branches:
        i, j = pos[br.f], pos[br.t]
        ei, ej = unit_exponent(n, i), unit_exponent(n, j)
        yc = br.y.conjugate()
        shunt = yc - 0.5j * br.bc
        t2 = abs(br.tap) ** 2
        s_from = Poly(n, {
            (ei, ei): shunt / t2,
            (ei, ej): -yc / br.tap,
        })
        s_to = Poly(n, {
            (ej, ej): shunt,
            (ej, ei): -yc / br.tap.conjugate(),
        })
        out.append((s_from, s_to))
    return out


def _current_expressions(case: NetworkCase, pos: dict[int, int]) -> list[tuple[Poly, Poly]]:
    """Per branch: (from-side, to-side) complex current polynomials
    (linear in the voltages)."""
    n = case.n
    zero = (0,) * n
    out = []
    for br in case.branches:
        i, j = pos[br.f], pos[br.t]
        ei, ej = unit_exponent(n, i), unit_exponent(n, j)
        ysh = br.y + 0.5j * br.bc
        t2 = abs(br.tap) ** 2
        i_from = Poly(n, {(ei, zero): ysh / t2, (ej, zero): -br.y / br.tap.conjugate()})
        i_to = Poly(n, {(ej, zero): ysh, (ei, zero): -br.y / br.tap})
        out.append((i_from, i_to))
    return out


def build_model(case: NetworkCase) -> AcopfModel:
    """Eliminate the generator powers and emit the voltage-only problem.

    Buses without a generator yield power-balance equalities; generator
    buses yield box inequalities on the real/imaginary parts of the
    eliminated generation expression.  Flow limits enter as quartic
    inequalities and are additionally recorded for the Shor lowering.
    """
    n = case.n
    pos = {b.ident: k for k, b in enumerate(case.buses)}
    flows = _flow_expressions(case, pos)

    # net injection expression per bus: S^d + conj(Y^s)|V|^2 + sum of flows
    inj = []
    for k, bus in enumerate(case.buses):
        e = unit_exponent(n, k)
        p = Poly(n, {(e, e): complex(bus.gs, bus.bs).conjugate()})
        p = p + Poly.constant(n, complex(bus.pd, bus.qd))
        inj.append(p)
    for br, (s_from, s_to) in zip(case.branches, flows):
        inj[pos[br.f]] = inj[pos[br.f]] + s_from
        inj[pos[br.t]] = inj[pos[br.t]] + s_to

    gen_at = {g.bus: g for g in case.gens}
    ineqs: list[Poly] = []
    eqs: list[Poly] = []
    cost_terms: list[CostTerm] = []
    stars: list[tuple[int, ...]] = []
    objective = Poly.zero(n)

    def box(expr: Poly, lo: float, hi: float) -> None:
        # a zero-width box is an equality; two opposing inequalities would
        # leave the relaxation without a strictly feasible point
        if lo == hi:
            eqs.append(expr - Poly.constant(n, lo))
        else:
            ineqs.append(expr - Poly.constant(n, lo))
            ineqs.append(Poly.constant(n, hi) - expr)

    for k, bus in enumerate(case.buses):
        e = unit_exponent(n, k)
        vsq = Poly(n, {(e, e): 1.0})
        box(vsq, bus.vmin ** 2, bus.vmax ** 2)
        g = gen_at.get(bus.ident)
        re_p = inj[k].real_part()
        im_p = inj[k].imag_part()
        if g is None:
            eqs.append(re_p)
            eqs.append(im_p)
        else:
            box(re_p, g.pmin, g.pmax)
            box(im_p, g.qmin, g.qmax)
            stars.append(tuple(sorted(re_p.variables())))
            label = f"gen@{bus.ident}"
            cost_terms.append(CostTerm(label, g.c2, g.c1, g.c0, re_p))
            piece = Poly.constant(n, g.c0) + g.c1 * re_p
            if g.c2:
                piece = piece + g.c2 * (re_p * re_p)
            objective = objective + piece

    for br, (s_from, s_to) in zip(case.branches, flows):
        i, j = pos[br.f], pos[br.t]
        ei, ej = unit_exponent(n, i), unit_exponent(n, j)
        vivj = Poly(n, {(ei, ej): 1.0})   # V_i conj(V_j)
        re_ij = vivj.real_part()
        im_ij = vivj.imag_part()
        if br.angmax is not None:
            ineqs.append(math.tan(br.angmax) * re_ij - im_ij)
        if br.angmin is not None:
            ineqs.append(im_ij - math.tan(br.angmin) * re_ij)

    flow_limits: list[FlowLimit] = []
    currents = _current_expressions(case, pos)
    vmin = {bus.ident: bus.vmin for bus in case.buses}
    for br, (s_from, s_to), (i_from, i_to) in zip(case.branches, flows, currents):
        if br.rate is None:
            continue
        for tag, s, cur, end in (("from", s_from, i_from, br.f),
                                 ("to", s_to, i_to, br.t)):
            quartic = Poly.constant(n, br.rate ** 2) - s * s.conjugate()
            # |S| = |V| |I| and |V| >= vmin at the measuring end, so
            # |I|^2 <= (rate/vmin)^2 is an implied quadratic constraint
            cur_row = (Poly.constant(n, (br.rate / vmin[end]) ** 2)
                       - cur * cur.conjugate())
            flow_limits.append(FlowLimit(
                f"flow[{br.f}-{br.t}:{tag}]", br.rate, s, len(ineqs), cur_row))
            ineqs.append(quartic)

    cpop = CPOP(n=n, objective=objective, ineqs=ineqs, eqs=eqs)
    return AcopfModel(case=case, cpop=cpop, bus_pos=pos,
                      flow_limits=flow_limits, cost_terms=cost_terms,
                      gen_star_cliques=stars)


# ---------------------------------------------------------------------------
# relaxations
# ---------------------------------------------------------------------------


def shor_model(model: AcopfModel, corr_extension: str = "min-fill") -> ComplexSDP:
    """First-order relaxation on the variable cliques.

    Dense first-order moment blocks per clique; all quadratic constraints
    become scalar rows.  The quartic flow limits are lowered to their
    implied quadratic current limits |I|^2 <= (rate/vmin)^2, which keeps
    the problem a QCQP; each quadratic cost piece is lowered through an
    epigraph scalar t with the 2x2 block [[t, L(Re S)], [., 1]].
    """
    cpop = model.cpop
    pattern = sp.min_initial_pattern(cpop, corr_extension, model.gen_star_cliques)
    builder = ModelBuilder(cpop.n)
    for l, clique in enumerate(pattern.cliques):
        builder.add_moment_block(sp.clique_basis(cpop.n, clique, 1), None,
                                 f"moment1[{l}]", dedupe=True)
    quartic = set(model.quartic_flow_indices)
    for j, g in enumerate(cpop.ineqs):
        if j not in quartic:
            builder.add_scalar_ineq(g, f"ineq[{j}]")
    for i, h in enumerate(cpop.eqs):
        builder.add_scalar_eq(h, f"eq[{i}]")
    for fl in model.flow_limits:
        builder.add_scalar_ineq(fl.current_row, fl.label)

    linear_cost = Poly.zero(cpop.n)
    extra: dict[int, float] = {}
    extra_const = 0.0
    for ct in model.cost_terms:
        linear_cost = linear_cost + ct.c1 * ct.re_power
        extra_const += ct.c0
        if ct.c2:
            t = builder.vars.aux_var(f"t[{ct.label}]")
            coeffs, const = builder.functional(ct.re_power)
            re_aff, re_c = {k: v.real for k, v in coeffs.items()}, const.real
            builder.add_block(f"cost[{ct.label}]", 2, {
                (0, 0): ({t: 1.0 + 0.0j}, 0.0j),
                (1, 1): ({}, 1.0 + 0.0j),
                (0, 1): ({k: complex(v) for k, v in re_aff.items()}, complex(re_c)),
            })
            extra[t] = ct.c2
    builder.set_objective_poly(linear_cost, extra, extra_const)
    return builder.build()


def order15_model(model: AcopfModel, corr_extension: str = "min-fill",
                  ts_extension: str = "max", k: int | str = 1) -> ComplexSDP:
    """Minimum-initial-order relaxation with the quartic flow limits kept.

    Cliques owning a flow limit (or a quartic cost piece) get order 2,
    the rest stay at order 1; every clique also carries a dense
    first-order moment block.
    """
    return assemble(model.cpop, RelaxOptions(
        sparsity="min-initial", k=k, corr_extension=corr_extension,
        ts_extension=ts_extension, extra_cliques=model.gen_star_cliques))


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def optimality_gap(ac: float, opt: float) -> float:
    """(AC - opt) / AC in percent."""
    if ac == 0:
        raise ValueError("AC objective value must be nonzero")
    return (ac - opt) / ac * 100.0


@dataclass
class AcopfReport:
    case: str
    order: str
    status: str
    opt: float
    mb: int
    time: float
    iterations: int
    ac: float | None = None
    gap: float | None = None
    accepted: bool | None = None   # gap strictly below 1%

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("case", "order", "status", "opt", "mb", "time", "iterations",
                 "ac", "gap", "accepted")}


def read_ac_table(path: str) -> dict[str, float]:
    """Two-column CSV case,ac_objective; a header row is permitted."""
    out: dict[str, float] = {}
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            name, _, val = line.partition(",")
            try:
                out[name.strip()] = float(val)
            except ValueError:
                continue  # header
    return out


def relax_and_solve(case: NetworkCase, order: str = "shor",
                    corr_extension: str = "min-fill", ts_extension: str = "max",
                    k: int | str = 1, ac: float | None = None,
                    settings: SolverSettings | None = None,
                    ) -> tuple[AcopfReport, SolveReport, ComplexSDP]:
    """Assemble and solve one relaxation of a parsed case."""
    t0 = time.time()
    model = build_model(case)
    if order in ("shor", "1", "1st"):
        sdp = shor_model(model, corr_extension)
        label = "1st"
    elif order in ("15", "1.5", "1.5th", "min"):
        sdp = order15_model(model, corr_extension, ts_extension, k)
        label = "1.5th"
    else:
        d = int(order)
        sdp = assemble(model.cpop, RelaxOptions(
            sparsity="cs-ts", order=d, k=k, corr_extension=corr_extension,
            ts_extension=ts_extension))
        label = f"d={d}"
    rep = solve(complex_to_real(sdp), settings)
    stats = sdp.statistics()
    gap = optimality_gap(ac, rep.pobj) if ac is not None else None
    report = AcopfReport(
        case=case.name, order=label, status=rep.status, opt=rep.pobj,
        mb=stats["mb"], time=time.time() - t0, iterations=rep.iterations,
        ac=ac, gap=gap, accepted=None if gap is None else bool(gap < 1.0))
    return report, rep, sdp

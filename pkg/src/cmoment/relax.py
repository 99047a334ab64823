"""Block-structured semidefinite relaxations over canonical moment variables.

Every moment symbol y_{beta,gamma} is owned by its canonical orientation
(beta lexicographically <= gamma); the swapped orientation is its complex
conjugate and diagonal symbols are real.  The models built here are linear
matrix inequalities in the real/imaginary parts of those symbols plus any
auxiliary scalars, and convert to real SDPs via the standard doubling
[[A, -B], [B, A]] of Hermitian blocks A + iB.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .poly import CPOP, Exponent, Poly, zero_exponent
from . import sparsity as sp

_IMAG_TOL = 1e-9


# ---------------------------------------------------------------------------
# variables and affine expressions
# ---------------------------------------------------------------------------


class VariableTable:
    """Lazily allocated real decision variables for canonical moment keys
    plus named auxiliary scalars.  y_{0,0} is the constant 1, not a variable."""

    def __init__(self, n: int):
        self.n = n
        self._zero = zero_exponent(n)
        self.keys: dict[tuple[Exponent, Exponent], tuple[int, int | None]] = {}
        self.meta: list[tuple] = []  # per index: ("re"|"im", beta, gamma) or ("aux", name)
        self.aux: dict[str, int] = {}

    @property
    def nvar(self) -> int:
        return len(self.meta)

    def _new(self, tag) -> int:
        self.meta.append(tag)
        return len(self.meta) - 1

    def moment(self, beta: Exponent, gamma: Exponent) -> tuple[dict[int, complex], complex]:
        """The symbol y_{beta,gamma} as a complex affine expression."""
        if beta == gamma:
            if beta == self._zero:
                return {}, 1.0 + 0.0j
            key = (beta, beta)
            if key not in self.keys:
                self.keys[key] = (self._new(("re", beta, beta)), None)
            r, _ = self.keys[key]
            return {r: 1.0 + 0.0j}, 0.0j
        swapped = beta > gamma
        key = (gamma, beta) if swapped else (beta, gamma)
        if key not in self.keys:
            r = self._new(("re", key[0], key[1]))
            i = self._new(("im", key[0], key[1]))
            self.keys[key] = (r, i)
        r, i = self.keys[key]
        return {r: 1.0 + 0.0j, i: (-1.0j if swapped else 1.0j)}, 0.0j

    def aux_var(self, name: str) -> int:
        if name not in self.aux:
            self.aux[name] = self._new(("aux", name))
        return self.aux[name]


def _acc(dst: dict[int, complex], src: dict[int, complex], scale: complex) -> None:
    for k, v in src.items():
        dst[k] = dst.get(k, 0.0j) + scale * v


def _real_affine(coeffs: dict[int, complex], const: complex,
                 where: str) -> tuple[dict[int, float], float]:
    """Drop vanishing imaginary parts; a Hermitian source must produce one."""
    bad = abs(const.imag)
    out = {}
    for k, v in coeffs.items():
        bad = max(bad, abs(v.imag))
        if abs(v.real) > 1e-15:
            out[k] = v.real
    if bad > _IMAG_TOL:
        raise ValueError(f"{where}: expression has imaginary residue {bad:.2e}")
    return out, const.real


# ---------------------------------------------------------------------------
# model containers
# ---------------------------------------------------------------------------


@dataclass
class ComplexBlock:
    """Hermitian-symbolic PSD block; upper-triangle entries are complex
    affine expressions, the lower triangle is implied by conjugation.
    nodes records the basis exponents for pure moment blocks."""

    label: str
    dim: int
    entries: dict[tuple[int, int], tuple[dict[int, complex], complex]]
    nodes: tuple | None = None


@dataclass
class ComplexSDP:
    n: int
    vars: VariableTable
    objective: tuple[dict[int, float], float]
    blocks: list[ComplexBlock]
    ineq_rows: list[tuple[dict[int, float], float, str]]
    eq_rows: list[tuple[dict[int, float], float, str]]

    def statistics(self) -> dict:
        sizes = sorted((b.dim for b in self.blocks), reverse=True)
        return {
            "mb": max(sizes, default=0),
            "block_sizes": sizes,
            "n_blocks": len(self.blocks),
            "n_vars": self.vars.nvar,
            "n_ineq_rows": len(self.ineq_rows),
            "n_eq_rows": len(self.eq_rows),
        }


@dataclass
class RealBlock:
    dim: int
    f0: dict[tuple[int, int], float]                  # upper triangle
    mats: dict[int, dict[tuple[int, int], float]]     # var index -> upper triangle
    label: str = ""


@dataclass
class RealSDP:
    """min c.x + const  s.t.  F0_b + sum_i x_i F_i_b  psd  per block,
    A_eq x = b_eq.  Variable meta is carried for export sidecars."""

    nvar: int
    c: np.ndarray
    obj_const: float
    blocks: list[RealBlock]
    eq_rows: list[dict[int, float]]
    eq_rhs: list[float]
    var_meta: list[tuple]
    labels: dict = field(default_factory=dict)

    def statistics(self) -> dict:
        sizes = sorted((b.dim for b in self.blocks), reverse=True)
        return {
            "mb": max(sizes, default=0),
            "block_sizes": sizes,
            "n_blocks": len(self.blocks),
            "n_vars": self.nvar,
            "n_eq_rows": len(self.eq_rows),
        }


# ---------------------------------------------------------------------------
# model builder
# ---------------------------------------------------------------------------


class ModelBuilder:
    """Incremental assembly of a ComplexSDP."""

    def __init__(self, n: int):
        self.n = n
        self.vars = VariableTable(n)
        self.blocks: list[ComplexBlock] = []
        self.ineq_rows: list[tuple[dict[int, float], float, str]] = []
        self.eq_rows: list[tuple[dict[int, float], float, str]] = []
        self.objective: tuple[dict[int, float], float] | None = None
        self._moment_block_seen: set = set()

    # linear functional L_y on polynomials, complex affine in the variables
    def functional(self, p: Poly) -> tuple[dict[int, complex], complex]:
        coeffs: dict[int, complex] = {}
        const = 0.0j
        for (beta, gamma), c in p.sorted_terms():
            mc, mconst = self.vars.moment(beta, gamma)
            _acc(coeffs, mc, c)
            const += c * mconst
        return coeffs, const

    def entry(self, row: Exponent, col: Exponent, g: Poly) -> tuple[dict[int, complex], complex]:
        """L_y(g * z^row * conj(z)^col)."""
        coeffs: dict[int, complex] = {}
        const = 0.0j
        for (bp, gp), c in g.sorted_terms():
            mc, mconst = self.vars.moment(sp._add(row, bp), sp._add(col, gp))
            _acc(coeffs, mc, c)
            const += c * mconst
        return coeffs, const

    def add_moment_block(self, nodes: tuple[Exponent, ...] | list[Exponent],
                         g: Poly | None, label: str, dedupe: bool = False) -> None:
        """PSD block L_y(g z^b conj(z)^g') over the given basis exponents;
        g=None means the shift polynomial 1 (a moment block).

        Pure moment blocks (g=None) whose basis is contained in an already
        emitted moment block are dropped, and previously emitted moment
        blocks contained in the new one are replaced: positive
        semidefiniteness of a matrix implies it for every principal
        submatrix, so nested blocks are redundant and only degrade the
        solver's conditioning."""
        nodes = tuple(nodes)
        if dedupe and g is None:
            node_set = frozenset(nodes)
            for other in self._moment_block_seen:
                if node_set <= other:
                    return
            stale = [other for other in self._moment_block_seen if other < node_set]
            if stale:
                for other in stale:
                    self._moment_block_seen.discard(other)
                drop = set(stale)
                self.blocks = [
                    b for b in self.blocks
                    if not (b.label.startswith("moment") and
                            frozenset(b.nodes or ()) in drop)]
            self._moment_block_seen.add(node_set)
        shift = Poly.constant(self.n, 1.0) if g is None else g
        dim = len(nodes)
        entries = {}
        for a in range(dim):
            for b in range(a, dim):
                entries[(a, b)] = self.entry(nodes[a], nodes[b], shift)
        self.blocks.append(ComplexBlock(label, dim, entries, nodes if g is None else None))

    def add_block(self, label: str, dim: int, entries: dict) -> None:
        """Custom Hermitian block from prebuilt upper-triangle affine entries."""
        self.blocks.append(ComplexBlock(label, dim, entries))

    def add_scalar_ineq(self, p: Poly, label: str) -> None:
        coeffs, const = self.functional(p)
        self.ineq_rows.append((*_real_affine(coeffs, const, label), label))

    def add_scalar_eq(self, p: Poly, label: str) -> None:
        coeffs, const = self.functional(p)
        self.eq_rows.append((*_real_affine(coeffs, const, label), label))

    def add_affine_ineq(self, coeffs: dict[int, float], const: float, label: str) -> None:
        self.ineq_rows.append((dict(coeffs), float(const), label))

    def add_eq_entries(self, nodes: tuple[Exponent, ...] | list[Exponent],
                       h: Poly, label: str, seen: set) -> None:
        """Entrywise-zero localizing rows L(h z^a conj(z)^b) = 0 over the
        given basis; complex entries split into real and imaginary rows.
        seen dedupes entries shared by overlapping block cliques."""
        nodes = list(nodes)
        for ai in range(len(nodes)):
            for bi in range(ai, len(nodes)):
                a, b = nodes[ai], nodes[bi]
                key = (a, b)
                if key in seen:
                    continue
                seen.add(key)
                coeffs, const = self.entry(a, b, h)
                re = {k: v.real for k, v in coeffs.items() if abs(v.real) > 1e-15}
                im = {k: v.imag for k, v in coeffs.items() if abs(v.imag) > 1e-15}
                if re or abs(const.real) > 1e-15:
                    self.eq_rows.append((re, const.real, f"{label}({ai},{bi})re"))
                if a != b and (im or abs(const.imag) > 1e-15):
                    self.eq_rows.append((im, const.imag, f"{label}({ai},{bi})im"))

    def set_objective_poly(self, p: Poly, extra: dict[int, float] | None = None,
                           extra_const: float = 0.0) -> None:
        coeffs, const = self.functional(p)
        obj, c0 = _real_affine(coeffs, const, "objective")
        for k, v in (extra or {}).items():
            obj[k] = obj.get(k, 0.0) + v
        self.objective = (obj, c0 + extra_const)

    def build(self) -> ComplexSDP:
        if self.objective is None:
            raise ValueError("objective not set")
        return ComplexSDP(self.n, self.vars, self.objective, self.blocks,
                          self.ineq_rows, self.eq_rows)


# ---------------------------------------------------------------------------
# relaxation assembly
# ---------------------------------------------------------------------------


@dataclass
class RelaxOptions:
    """Knobs for assemble().

    sparsity: dense | cs | ts | cs-ts | cs-ts-extra | min-initial.
    order d is required except for min-initial (which derives per-clique
    orders); k is the sparse order for the term-sparsity modes, or "auto"
    to iterate to stabilization.  corr_extension picks the variable-graph
    chordal extension, ts_extension the term-graph one.
    """

    order: int | None = None
    k: int | str = 1
    sparsity: str = "dense"
    corr_extension: str = "min-fill"
    ts_extension: str = "max"
    extra_cliques: list[tuple[int, ...]] | None = None
    first_order_blocks: bool = False


def _check_order(cpop: CPOP, d: int) -> None:
    if d < cpop.d_min:
        raise ValueError(f"relaxation order {d} below minimum {cpop.d_min}")
    if cpop.objective.is_zero():
        raise ValueError("empty objective")


def _emit_residual_rows(builder: ModelBuilder, cpop: CPOP,
                        pattern: "sp.CorrelativePattern") -> None:
    for j in pattern.residual:
        builder.add_scalar_ineq(cpop.ineqs[j], f"ineq[{j}]")
    for i in pattern.eq_residual:
        builder.add_scalar_eq(cpop.eqs[i], f"eq[{i}]")


def assemble(cpop: CPOP, options: RelaxOptions | None = None) -> ComplexSDP:
    """Build the moment relaxation of a CPOP as a complex SDP.

    One PSD block is emitted per maximal clique of every owner graph (the
    PSD-completability reading of the block-sparse moment conditions);
    residual constraints become scalar rows, equalities become scalar
    equality rows and y_{0,0}=1 is substituted away.
    """
    opt = options or RelaxOptions()
    mode = opt.sparsity
    builder = ModelBuilder(cpop.n)
    dj = cpop.ineq_half_degrees

    dh = [h.half_degree() for h in cpop.eqs]
    if mode == "dense":
        d = opt.order
        _check_order(cpop, d)
        everything = tuple(range(cpop.n))
        builder.add_moment_block(sp.clique_basis(cpop.n, everything, d),
                                 None, "moment")
        for j, g in enumerate(cpop.ineqs):
            builder.add_moment_block(
                sp.clique_basis(cpop.n, everything, d - dj[j]), g, f"loc[{j}]")
        for i, h in enumerate(cpop.eqs):
            builder.add_eq_entries(sp.clique_basis(cpop.n, everything, d - dh[i]),
                                   h, f"eq[{i}]", set())
    elif mode == "cs":
        d = opt.order
        _check_order(cpop, d)
        pattern = sp.correlative_pattern(cpop, d, opt.corr_extension)
        eq_seen: dict[int, set] = {i: set() for i in range(len(cpop.eqs))}
        for l, clique in enumerate(pattern.cliques):
            builder.add_moment_block(sp.clique_basis(cpop.n, clique, d), None,
                                     f"moment[{l}]", dedupe=True)
            for j in pattern.assigned[l]:
                builder.add_moment_block(sp.clique_basis(cpop.n, clique, d - dj[j]),
                                         cpop.ineqs[j], f"loc[{j}]")
            for i in pattern.eq_assigned[l]:
                builder.add_eq_entries(sp.clique_basis(cpop.n, clique, d - dh[i]),
                                       cpop.eqs[i], f"eq[{i}]", eq_seen[i])
        _emit_residual_rows(builder, cpop, pattern)
    elif mode in ("ts", "cs-ts", "cs-ts-extra", "min-initial"):
        if mode == "ts":
            d = opt.order
            _check_order(cpop, d)
            pattern = sp.dense_pattern(cpop)
            orders = [d]
        elif mode == "min-initial":
            if cpop.objective.is_zero():
                raise ValueError("empty objective")
            pattern = sp.min_initial_pattern(cpop, opt.corr_extension, opt.extra_cliques)
            orders = sp.min_relaxation_orders(cpop, pattern)
        else:
            d = opt.order
            _check_order(cpop, d)
            pattern = sp.correlative_pattern(cpop, d, opt.corr_extension)
            orders = [d] * len(pattern.cliques)
        tp = sp.term_pattern(cpop, pattern, orders, opt.k, opt.ts_extension)
        eq_seen = {i: set() for i in range(len(cpop.eqs))}
        for (l, tag), ob in tp.owners.items():
            if tag is not None and tag[0] == "h":
                i = tag[1]
                for nodes in ob.cliques:
                    builder.add_eq_entries(nodes, cpop.eqs[i], f"eq[{i}]", eq_seen[i])
                continue
            g = None if tag is None else cpop.ineqs[tag[1]]
            label = f"moment[{l}]" if tag is None else f"loc[{tag[1]}]"
            for ci, nodes in enumerate(ob.cliques):
                builder.add_moment_block(nodes, g, f"{label}.{ci}",
                                         dedupe=(tag is None))
        if mode in ("cs-ts-extra", "min-initial") or opt.first_order_blocks:
            for l, clique in enumerate(pattern.cliques):
                builder.add_moment_block(sp.clique_basis(cpop.n, clique, 1), None,
                                         f"moment1[{l}]", dedupe=True)
        _emit_residual_rows(builder, cpop, pattern)
    else:
        raise ValueError(f"unknown sparsity mode {mode!r}")

    builder.set_objective_poly(cpop.objective)
    model = builder.build()
    _check_objective_coverage(model)
    return model


def _check_objective_coverage(model: ComplexSDP) -> None:
    """Every variable with objective weight must appear in some PSD block or
    row; otherwise the relaxation is unbounded by construction."""
    covered: set[int] = set()
    for b in model.blocks:
        for coeffs, _ in b.entries.values():
            covered.update(coeffs)
    for coeffs, _, _ in model.ineq_rows + model.eq_rows:
        covered.update(coeffs)
    missing = [k for k in model.objective[0] if k not in covered]
    if missing:
        metas = [model.vars.meta[k] for k in missing[:3]]
        raise ValueError(
            f"objective references {len(missing)} unconstrained moment variables, "
            f"e.g. {metas}; raise the relaxation order")


# ---------------------------------------------------------------------------
# complex -> real conversion
# ---------------------------------------------------------------------------


def _entry_parts(expr: tuple[dict[int, complex], complex]):
    coeffs, const = expr
    re = {k: v.real for k, v in coeffs.items() if abs(v.real) > 1e-15}
    im = {k: v.imag for k, v in coeffs.items() if abs(v.imag) > 1e-15}
    return re, const.real, im, const.imag


def _block_is_real(block: ComplexBlock) -> bool:
    for expr in block.entries.values():
        _, _, im, imc = _entry_parts(expr)
        if im or abs(imc) > 1e-15:
            return False
    return True


def complex_to_real(model: ComplexSDP, force_double: bool = False) -> RealSDP:
    """Convert Hermitian-symbolic blocks to real symmetric blocks.

    A block A + iB becomes [[A, -B], [B, A]] of doubled dimension; blocks
    whose imaginary part vanishes identically stay at their original size
    unless force_double is set.  Scalar inequality rows become 1x1 blocks.
    """
    nvar = model.vars.nvar
    blocks: list[RealBlock] = []

    def put(f0, mats, i, j, re_c, re_coeffs):
        if i > j:
            i, j = j, i
        if abs(re_c) > 0.0:
            f0[(i, j)] = f0.get((i, j), 0.0) + re_c
        for k, v in re_coeffs.items():
            m = mats.setdefault(k, {})
            m[(i, j)] = m.get((i, j), 0.0) + v

    for blk in model.blocks:
        r = blk.dim
        real_only = _block_is_real(blk) and not force_double
        dim = r if real_only else 2 * r
        f0: dict[tuple[int, int], float] = {}
        mats: dict[int, dict[tuple[int, int], float]] = {}
        for (a, b), expr in blk.entries.items():
            re, rec, im, imc = _entry_parts(expr)
            if a == b and (im or abs(imc) > 1e-12):
                raise ValueError(f"block {blk.label}: diagonal entry not real")
            put(f0, mats, a, b, rec, re)
            if not real_only:
                put(f0, mats, r + a, r + b, rec, re)
                # top-right -B, and its symmetric partner for a < b
                if abs(imc) > 0.0:
                    f0[(a, r + b)] = f0.get((a, r + b), 0.0) - imc
                for k, v in im.items():
                    m = mats.setdefault(k, {})
                    m[(a, r + b)] = m.get((a, r + b), 0.0) - v
                if a != b:
                    if abs(imc) > 0.0:
                        f0[(b, r + a)] = f0.get((b, r + a), 0.0) + imc
                    for k, v in im.items():
                        m = mats.setdefault(k, {})
                        m[(b, r + a)] = m.get((b, r + a), 0.0) + v
        blocks.append(RealBlock(dim, f0, mats, blk.label))

    for coeffs, const, label in model.ineq_rows:
        f0 = {(0, 0): const} if abs(const) > 0.0 else {}
        mats = {k: {(0, 0): v} for k, v in coeffs.items() if v != 0.0}
        blocks.append(RealBlock(1, f0, mats, label))

    c = np.zeros(nvar)
    for k, v in model.objective[0].items():
        c[k] = v
    eq_rows = []
    eq_rhs = []
    for coeffs, const, _ in model.eq_rows:
        eq_rows.append(dict(coeffs))
        eq_rhs.append(-const)

    return RealSDP(
        nvar=nvar, c=c, obj_const=model.objective[1], blocks=blocks,
        eq_rows=eq_rows, eq_rhs=eq_rhs, var_meta=list(model.vars.meta),
        labels={"n": model.n},
    )

"""Correlative and term sparsity patterns for complex moment relaxations.

Correlative sparsity groups variables into cliques of a chordal extension
of a variable-interaction graph and partitions the constraints over those
cliques.  Term sparsity refines each clique's monomial basis into blocks
via an iterated support-extension / chordal-extension chain of graphs on
the basis exponents.  Sign symmetries of the joint support give a provable
coarsest limit for that refinement and are used as a cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .graphs import ChordalGraph, Graph, chordal_extension
from .poly import (
    CPOP,
    Exponent,
    Pair,
    Poly,
    exponent_degree,
    exponent_support,
    monomial_basis,
    zero_exponent,
)

# ---------------------------------------------------------------------------
# variable-level (correlative) sparsity
# ---------------------------------------------------------------------------


def _pair_var_support(beta: Exponent, gamma: Exponent) -> frozenset[int]:
    return exponent_support(beta) | exponent_support(gamma)


def _monomial_edges(g: Graph, polys: list[Poly]) -> None:
    """Connect all variable pairs occurring inside a single monomial."""
    for p in polys:
        for beta, gamma in p.terms:
            vs = sorted(_pair_var_support(beta, gamma))
            for i, a in enumerate(vs):
                for b in vs[i + 1:]:
                    g.add_edge(a, b)


def csp_graph(cpop: CPOP, d: int) -> Graph:
    """Variable-interaction graph at relaxation order d.

    Monomial-wise edges for the objective, the equalities and the
    inequalities of half-degree exactly d; all-pairs edges over the
    variable set of every other inequality.
    """
    if d < cpop.d_min:
        raise ValueError(f"relaxation order {d} below minimum {cpop.d_min}")
    g = Graph(range(cpop.n))
    dj = cpop.ineq_half_degrees
    residual = [j for j, v in enumerate(dj) if v == d]
    _monomial_edges(g, [cpop.objective] + [cpop.ineqs[j] for j in residual] + cpop.eqs)
    for j, gj in enumerate(cpop.ineqs):
        if j in residual:
            continue
        vs = sorted(gj.variables())
        for i, a in enumerate(vs):
            for b in vs[i + 1:]:
                g.add_edge(a, b)
    return g


def icsp_graph(cpop: CPOP, extra_cliques: list[tuple[int, ...]] | None = None) -> Graph:
    """Variable-interaction graph with monomial-wise edges only.

    A subgraph of csp_graph(cpop, d) for every admissible d.  extra_cliques
    adds all-pairs edges over the given variable groups (used by front ends
    that need specific constraint supports to stay inside one clique).
    """
    g = Graph(range(cpop.n))
    _monomial_edges(g, [cpop.objective] + cpop.ineqs + cpop.eqs)
    for group in extra_cliques or []:
        vs = sorted(set(group))
        for i, a in enumerate(vs):
            for b in vs[i + 1:]:
                g.add_edge(a, b)
    return g


@dataclass
class CorrelativePattern:
    """Variable cliques plus the induced constraint partition.

    Equalities are partitioned like inequalities (an equality is the pair
    of opposing inequalities, sharing one support); the residual lists hold
    constraints whose variables fit no clique and that are therefore only
    enforced scalar-wise."""

    n: int
    mode: str                          # "csp" or "icsp"
    extension: str
    cliques: list[tuple[int, ...]]     # sorted variable tuples
    assigned: list[list[int]]          # inequality indices owned by each clique
    residual: list[int]                # inequality indices handled scalar-only
    eq_assigned: list[list[int]] = field(default_factory=list)
    eq_residual: list[int] = field(default_factory=list)

    def clique_of_vars(self, vs: frozenset[int]) -> int | None:
        """Lowest-index clique containing all the given variables."""
        for l, clique in enumerate(self.cliques):
            if vs <= set(clique):
                return l
        return None

    def max_clique_size(self) -> int:
        return max(len(c) for c in self.cliques)


def _assign(polys: list[Poly], cliques: list[tuple[int, ...]],
            candidates: list[int], strict: bool) -> tuple[list[list[int]], list[int]]:
    assigned: list[list[int]] = [[] for _ in cliques]
    residual: list[int] = []
    sets = [set(c) for c in cliques]
    for j in candidates:
        vs = polys[j].variables()
        home = next((l for l, s in enumerate(sets) if vs <= s), None)
        if home is None:
            if strict:
                raise ValueError(
                    f"inequality {j} fits no clique; the variable graph "
                    "construction should have made its support a clique")
            residual.append(j)
        else:
            assigned[home].append(j)
    return assigned, residual


def dense_pattern(cpop: CPOP) -> CorrelativePattern:
    """Single clique over all variables, every constraint assigned to it."""
    return CorrelativePattern(
        n=cpop.n, mode="dense", extension="none",
        cliques=[tuple(range(cpop.n))],
        assigned=[list(range(len(cpop.ineqs)))],
        residual=[],
        eq_assigned=[list(range(len(cpop.eqs)))],
        eq_residual=[],
    )


def correlative_pattern(cpop: CPOP, d: int, extension: str = "min-fill") -> CorrelativePattern:
    """Clique decomposition from the order-d variable graph.

    Inequalities of half-degree d go to the residual (scalar) group; every
    other inequality is owned by the lowest-index clique covering it.
    """
    cg = chordal_extension(csp_graph(cpop, d), extension)
    cliques = sorted(cg.cliques)
    dj = cpop.ineq_half_degrees
    residual_fixed = [j for j, v in enumerate(dj) if v == d]
    candidates = [j for j in range(len(cpop.ineqs)) if j not in residual_fixed]
    assigned, _ = _assign(cpop.ineqs, cliques, candidates, strict=True)
    eq_assigned, eq_residual = _assign(cpop.eqs, cliques, list(range(len(cpop.eqs))), False)
    return CorrelativePattern(cpop.n, "csp", extension, cliques, assigned,
                              residual_fixed, eq_assigned, eq_residual)


def min_initial_pattern(cpop: CPOP, extension: str = "min-fill",
                        extra_cliques: list[tuple[int, ...]] | None = None) -> CorrelativePattern:
    """Clique decomposition from the monomial-wise variable graph.

    Constraints whose variables fit no clique become residual scalars.
    """
    cg = chordal_extension(icsp_graph(cpop, extra_cliques), extension)
    cliques = sorted(cg.cliques)
    assigned, residual = _assign(cpop.ineqs, cliques, list(range(len(cpop.ineqs))), False)
    eq_assigned, eq_residual = _assign(cpop.eqs, cliques, list(range(len(cpop.eqs))), False)
    return CorrelativePattern(cpop.n, "icsp", extension, cliques, assigned,
                              residual, eq_assigned, eq_residual)


def split_objective(cpop: CPOP, pattern: CorrelativePattern) -> list[Poly]:
    """Decompose the objective as a sum of per-clique pieces.

    Each term goes to the lowest-index clique containing its variables;
    a term fitting no clique indicates a broken variable graph.
    """
    parts = [dict() for _ in pattern.cliques]
    sets = [set(c) for c in pattern.cliques]
    for (beta, gamma), c in cpop.objective.sorted_terms():
        vs = _pair_var_support(beta, gamma)
        home = next((l for l, s in enumerate(sets) if vs <= s), None)
        if home is None:
            raise ValueError(f"objective term {(beta, gamma)} fits no clique")
        parts[home][(beta, gamma)] = c
    return [Poly(cpop.n, t) for t in parts]


def min_relaxation_orders(cpop: CPOP, pattern: CorrelativePattern) -> list[int]:
    """Per-clique minimum relaxation orders.

    o_l = max over owned constraint half-degrees and the half-degree of the
    clique's objective piece, floored at 1; raised if an objective term has
    a one-sided degree above that (such a term would otherwise reference
    moment-matrix entries outside the clique basis).
    """
    parts = split_objective(cpop, pattern)
    dj = cpop.ineq_half_degrees
    dh = [h.half_degree() for h in cpop.eqs]
    orders = []
    for l in range(len(pattern.cliques)):
        cand = [dj[j] for j in pattern.assigned[l]]
        cand += [dh[i] for i in pattern.eq_assigned[l]]
        if not parts[l].is_zero():
            cand.append(parts[l].half_degree())
            cand.append(parts[l].one_sided_degree())
        orders.append(max(cand + [1]))
    return orders


# ---------------------------------------------------------------------------
# monomial-level (term) sparsity
# ---------------------------------------------------------------------------


def clique_basis(n: int, clique: tuple[int, ...], d: int) -> list[Exponent]:
    """Degree-<=d exponents over the clique variables, zero-padded into N^n
    (lexicographic order in the ambient space)."""
    local = monomial_basis(len(clique), d)
    out = []
    for e in local:
        amb = [0] * n
        for i, v in zip(clique, e):
            amb[i] = v
        out.append(tuple(amb))
    return sorted(out)


def restrict_support(support: set[Pair], clique: tuple[int, ...]) -> set[Pair]:
    """Pairs whose combined variable support lies inside the clique."""
    cs = set(clique)
    return {(b, g) for (b, g) in support if _pair_var_support(b, g) <= cs}


def tsp_graph(support: set[Pair], nodes: list[Exponent]) -> Graph:
    """Term-sparsity pattern graph: one edge per off-diagonal support pair
    with both exponents inside the node basis."""
    g = Graph(nodes)
    node_set = set(nodes)
    for beta, gamma in support:
        if beta != gamma and beta in node_set and gamma in node_set:
            g.add_edge(beta, gamma)
    return g


def g_support(g: Poly, graph: Graph) -> set[Pair]:
    """Shifted support of a basis graph: (beta+beta', gamma+gamma') over the
    diagonal and the edges of the graph, shifted by every term of g."""
    out: set[Pair] = set()
    supp = list(g.terms)
    for v in graph.nodes:
        for bp, gp in supp:
            out.add((_add(v, bp), _add(v, gp)))
    for a, b in graph.edges():
        for bp, gp in supp:
            out.add((_add(a, bp), _add(b, gp)))
            out.add((_add(b, bp), _add(a, gp)))
    return out


def _add(a: Exponent, b: Exponent) -> Exponent:
    return tuple(x + y for x, y in zip(a, b))


def _sub_nonneg(a: Exponent, b: Exponent) -> Exponent | None:
    out = []
    for x, y in zip(a, b):
        v = x - y
        if v < 0:
            return None
        out.append(v)
    return tuple(out)


#: owner tag: None for the moment matrix, ("g", j) for inequality j,
#: ("h", i) for equality i (treated as its pair of opposing inequalities)
OwnerTag = tuple[str, int] | None


@dataclass
class OwnerBlocks:
    """Stabilizable block graph for one (clique, constraint) owner.

    tag is None for the moment-matrix owner (shift polynomial 1); nodes is
    the ambient-embedded monomial basis of the owner."""

    clique_index: int
    tag: OwnerTag
    nodes: list[Exponent]
    graph: ChordalGraph = None
    cliques: list[tuple[Exponent, ...]] = field(default_factory=list)


@dataclass
class TermPattern:
    corr: CorrelativePattern
    orders: list[int]
    extension: str
    k: int
    stabilized: bool
    owners: dict[tuple[int, OwnerTag], OwnerBlocks]

    def max_block_size(self) -> int:
        return max(
            (len(c) for ob in self.owners.values() for c in ob.cliques), default=0)


def _owner_shift_poly(cpop: CPOP, tag: OwnerTag) -> Poly:
    if tag is None:
        return Poly.constant(cpop.n, 1.0)
    kind, idx = tag
    return cpop.ineqs[idx] if kind == "g" else cpop.eqs[idx]


def term_pattern(cpop: CPOP, pattern: CorrelativePattern, orders: list[int],
                 k: int | str = 1, extension: str = "max") -> TermPattern:
    """Run the term-sparsity iteration over all owners of the pattern.

    k is the number of completed support-extension rounds (k=1 means one
    round from the tsp-graph initialization); k="auto" iterates until one
    more round would change no edge set.  Each round unions the fresh
    support edges with the previous graph before chordally extending, so
    the chain of graphs ascends for every extension heuristic.
    """
    auto = k == "auto"
    if not auto and (not isinstance(k, int) or k < 1):
        raise ValueError("k must be a positive integer or 'auto'")
    support = cpop.all_support()
    dj = cpop.ineq_half_degrees
    dh = [h.half_degree() for h in cpop.eqs]

    owners: dict[tuple[int, OwnerTag], OwnerBlocks] = {}
    shift: dict[tuple[int, OwnerTag], Poly] = {}
    graphs: dict[tuple[int, OwnerTag], Graph] = {}
    for l, clique in enumerate(pattern.cliques):
        supp_l = restrict_support(support, clique)
        nodes0 = clique_basis(cpop.n, clique, orders[l])
        owners[(l, None)] = OwnerBlocks(l, None, nodes0)
        shift[(l, None)] = _owner_shift_poly(cpop, None)
        graphs[(l, None)] = tsp_graph(supp_l, nodes0)
        tags = [("g", j) for j in pattern.assigned[l]]
        tags += [("h", i) for i in pattern.eq_assigned[l]]
        for tag in tags:
            deg = dj[tag[1]] if tag[0] == "g" else dh[tag[1]]
            nodes_j = clique_basis(cpop.n, clique, orders[l] - deg)
            owners[(l, tag)] = OwnerBlocks(l, tag, nodes_j)
            shift[(l, tag)] = _owner_shift_poly(cpop, tag)
            graphs[(l, tag)] = Graph(nodes_j)

    def round_edges(current: dict) -> dict:
        """Fresh support edges F for every owner from the current union."""
        union: set[Pair] = set()
        for key, g in current.items():
            union |= g_support(shift[key], g)
        fresh = {}
        for key, ob in owners.items():
            node_set = set(ob.nodes)
            edges = set()
            for cb, cg in union:
                for (bp, gp) in shift[key].terms:
                    beta = _sub_nonneg(cb, bp)
                    gamma = _sub_nonneg(cg, gp)
                    if beta is None or gamma is None or beta == gamma:
                        continue
                    if beta in node_set and gamma in node_set:
                        edges.add((beta, gamma) if beta <= gamma else (gamma, beta))
            fresh[key] = edges
        return fresh

    def nothing_new(fresh: dict) -> bool:
        return all(
            all(graphs[key].has_edge(a, b) for a, b in fresh[key])
            for key in owners
        )

    done = 0
    stabilized = False
    while True:
        fresh = round_edges(graphs)
        if done >= 1 and nothing_new(fresh):
            stabilized = True
            break
        if not auto and done == k:
            break
        new_graphs = {}
        for key, g in graphs.items():
            merged = Graph(owners[key].nodes)
            for a, b in g.edges():
                merged.add_edge(a, b)
            for a, b in fresh[key]:
                merged.add_edge(a, b)
            new_graphs[key] = chordal_extension(merged, extension)
        graphs = new_graphs
        done += 1
        if done > 10_000:
            raise RuntimeError("term-sparsity iteration failed to stabilize")

    for key, ob in owners.items():
        g = graphs[key]
        if not isinstance(g, ChordalGraph):
            g = chordal_extension(g, extension)
        ob.graph = g
        ob.cliques = list(g.cliques)
    return TermPattern(pattern, orders, extension, done, stabilized, owners)


# ---------------------------------------------------------------------------
# sign symmetries
# ---------------------------------------------------------------------------


@dataclass
class SignSymmetry:
    """GF(2) basis of the binary vectors r with r.(beta+gamma) even for all
    support pairs."""

    n: int
    basis: list[tuple[int, ...]]


def _exponent_parity_mask(beta: Exponent, gamma: Exponent) -> int:
    mask = 0
    for i, (x, y) in enumerate(zip(beta, gamma)):
        if (x + y) & 1:
            mask |= 1 << i
    return mask


def sign_symmetries(support: set[Pair], n: int) -> SignSymmetry:
    """Nullspace basis over GF(2) of the (beta+gamma mod 2) rows.

    Rows are kept in reduced echelon form keyed by their top set bit, so
    each pivot column appears in exactly one row and the nullspace reads
    off directly from the free columns."""
    pivrows: dict[int, int] = {}
    for beta, gamma in support:
        m = _exponent_parity_mask(beta, gamma)
        for q in sorted(pivrows, reverse=True):
            if m >> q & 1:
                m ^= pivrows[q]
        if m:
            p = m.bit_length() - 1
            for q in list(pivrows):
                if pivrows[q] >> p & 1:
                    pivrows[q] ^= m
            pivrows[p] = m
    basis = []
    for free in range(n):
        if free in pivrows:
            continue
        vec = 1 << free
        for p, row in pivrows.items():
            if row >> free & 1:
                vec |= 1 << p
        basis.append(tuple((vec >> i) & 1 for i in range(n)))
    return SignSymmetry(n, basis)


def respects_sign_symmetries(sym: SignSymmetry, beta: Exponent, gamma: Exponent) -> bool:
    for r in sym.basis:
        if sum(ri * (b + g) for ri, b, g in zip(r, beta, gamma)) % 2:
            return False
    return True


def sign_symmetry_partition(sym: SignSymmetry, basis: list[Exponent]) -> list[list[Exponent]]:
    """Equivalence classes of the basis under the GF(2) signature map."""
    blocks: dict[tuple[int, ...], list[Exponent]] = {}
    for e in basis:
        sig = tuple(sum(ri * v for ri, v in zip(r, e)) % 2 for r in sym.basis)
        blocks.setdefault(sig, []).append(e)
    return list(blocks.values())


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------


def pattern_report(tp: TermPattern) -> dict:
    """Cliques, per-owner block sizes and the maximal block size."""
    def owner_key(kv):
        l, tag = kv[0]
        return (l, ("",) if tag is None else tag)

    owners = []
    for (l, tag), ob in sorted(tp.owners.items(), key=owner_key):
        owners.append({
            "clique": l,
            "owner": "moment" if tag is None else f"{tag[0]}[{tag[1]}]",
            "order": tp.orders[l],
            "basis_size": len(ob.nodes),
            "block_sizes": sorted((len(c) for c in ob.cliques), reverse=True),
        })
    return {
        "mode": tp.corr.mode,
        "extension": tp.extension,
        "k": tp.k,
        "stabilized": tp.stabilized,
        "cliques": [list(c) for c in tp.corr.cliques],
        "residual_constraints": list(tp.corr.residual),
        "residual_equalities": list(tp.corr.eq_residual),
        "orders": list(tp.orders),
        "owners": owners,
        "mb": tp.max_block_size(),
    }

"""Undirected graphs over arbitrary hashable labels, chordal extensions and
maximal-clique enumeration.

Node identity is positional: every graph carries an ordered node list and
all tie-breaking (greedy eliminations, clique sorting) happens on node
positions, so runs are reproducible for any label type.
"""

from __future__ import annotations

from typing import Hashable, Iterable, Sequence

Node = Hashable


class Graph:
    """Simple undirected graph; no self-loops, no parallel edges."""

    def __init__(self, nodes: Sequence[Node], edges: Iterable[tuple[Node, Node]] = ()):
        self.nodes: list[Node] = list(nodes)
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("duplicate nodes")
        self.pos: dict[Node, int] = {v: i for i, v in enumerate(self.nodes)}
        self.adj: dict[Node, set[Node]] = {v: set() for v in self.nodes}
        for a, b in edges:
            self.add_edge(a, b)

    def add_edge(self, a: Node, b: Node) -> None:
        if a not in self.pos or b not in self.pos:
            raise ValueError(f"edge ({a!r}, {b!r}) references unknown node")
        if a == b:
            return
        self.adj[a].add(b)
        self.adj[b].add(a)

    def has_edge(self, a: Node, b: Node) -> bool:
        return b in self.adj.get(a, ())

    def num_edges(self) -> int:
        return sum(len(s) for s in self.adj.values()) // 2

    def edges(self) -> list[tuple[Node, Node]]:
        """Edges with endpoints ordered by node position, sorted."""
        out = []
        for v in self.nodes:
            pv = self.pos[v]
            for w in self.adj[v]:
                if self.pos[w] > pv:
                    out.append((v, w))
        out.sort(key=lambda e: (self.pos[e[0]], self.pos[e[1]]))
        return out

    def copy(self) -> "Graph":
        g = Graph(self.nodes)
        for v, nb in self.adj.items():
            g.adj[v] = set(nb)
        return g

    def connected_components(self) -> list[list[Node]]:
        """Components as node lists in position order; components ordered by
        their smallest node position."""
        seen: set[Node] = set()
        comps: list[list[Node]] = []
        for v in self.nodes:
            if v in seen:
                continue
            stack = [v]
            comp = []
            seen.add(v)
            while stack:
                u = stack.pop()
                comp.append(u)
                for w in self.adj[u]:
                    if w not in seen:
                        seen.add(w)
                        stack.append(w)
            comp.sort(key=self.pos.get)
            comps.append(comp)
        return comps


class ChordalGraph(Graph):
    """A chordal graph together with a certifying perfect elimination
    ordering and its maximal cliques (each sorted by node position)."""

    def __init__(self, nodes: Sequence[Node], edges: Iterable[tuple[Node, Node]],
                 peo: Sequence[Node], cliques: list[tuple[Node, ...]]):
        super().__init__(nodes, edges)
        self.peo: list[Node] = list(peo)
        self.cliques: list[tuple[Node, ...]] = cliques

    def max_clique_size(self) -> int:
        return max((len(c) for c in self.cliques), default=0)


def _cliques_from_peo(g: Graph, peo: Sequence[Node]) -> list[tuple[Node, ...]]:
    """Candidate cliques {v} + later neighbors for each v in elimination
    order, reduced to the maximal ones."""
    rank = {v: i for i, v in enumerate(peo)}
    cands: list[frozenset[Node]] = []
    for v in peo:
        c = frozenset([v] + [w for w in g.adj[v] if rank[w] > rank[v]])
        cands.append(c)
    # discard candidates contained in another candidate
    cands.sort(key=len, reverse=True)
    maximal: list[frozenset[Node]] = []
    for c in cands:
        if not any(c <= m for m in maximal):
            maximal.append(c)
    out = [tuple(sorted(c, key=g.pos.get)) for c in maximal]
    out.sort(key=lambda c: [g.pos[v] for v in c])
    return out


def chordal_extension_maximal(g: Graph) -> ChordalGraph:
    """Complete every connected component; the components become the
    maximal cliques."""
    comps = g.connected_components()
    ext = g.copy()
    for comp in comps:
        for i, a in enumerate(comp):
            for b in comp[i + 1:]:
                ext.add_edge(a, b)
    peo = [v for comp in comps for v in comp]
    cliques = [tuple(comp) for comp in comps]
    return ChordalGraph(g.nodes, ext.edges(), peo, cliques)


def chordal_extension_greedy(g: Graph, heuristic: str = "min-fill") -> ChordalGraph:
    """Elimination-game chordal extension.

    heuristic: "min-degree" picks the node of smallest current degree,
    "min-fill" the node whose elimination adds the fewest fill edges.
    Ties break on smallest node position.  Fill edges join neighbors of the
    eliminated node, hence never connect distinct components.
    """
    if heuristic not in ("min-degree", "min-fill"):
        raise ValueError(f"unknown heuristic {heuristic!r}")
    work = {v: set(nb) for v, nb in g.adj.items()}
    ext = g.copy()
    remaining = set(g.nodes)
    peo: list[Node] = []

    def fill_count(v: Node) -> int:
        nb = list(work[v])
        cnt = 0
        for i, a in enumerate(nb):
            wa = work[a]
            for b in nb[i + 1:]:
                if b not in wa:
                    cnt += 1
        return cnt

    while remaining:
        if heuristic == "min-degree":
            v = min(remaining, key=lambda u: (len(work[u]), g.pos[u]))
        else:
            v = min(remaining, key=lambda u: (fill_count(u), g.pos[u]))
        nb = sorted(work[v], key=g.pos.get)
        for i, a in enumerate(nb):
            for b in nb[i + 1:]:
                if b not in work[a]:
                    work[a].add(b)
                    work[b].add(a)
                    ext.add_edge(a, b)
        for a in nb:
            work[a].discard(v)
        del work[v]
        remaining.remove(v)
        peo.append(v)

    cliques = _cliques_from_peo(ext, peo)
    return ChordalGraph(g.nodes, ext.edges(), peo, cliques)


def chordal_extension(g: Graph, method: str) -> ChordalGraph:
    """Dispatch on method: "max", "min-degree"/"md" or "min-fill"/"mf"."""
    if method in ("max", "maximal"):
        return chordal_extension_maximal(g)
    if method in ("md", "min-degree"):
        return chordal_extension_greedy(g, "min-degree")
    if method in ("mf", "min-fill"):
        return chordal_extension_greedy(g, "min-fill")
    raise ValueError(f"unknown chordal extension method {method!r}")


def maximal_cliques(cg: ChordalGraph) -> list[tuple[Node, ...]]:
    return list(cg.cliques)

"""Shared oracles and instance generators for the test suite."""

import itertools
import math

import numpy as np

from cmoment.poly import CPOP, Poly, ball_constraint, monomial_basis, unit_exponent


def brute_force_basis(n, d):
    """Independent enumeration of exponents of degree <= d."""
    out = [e for e in itertools.product(range(d + 1), repeat=n) if sum(e) <= d]
    return sorted(out)


def random_hermitian_poly(n, rng, n_terms=4, max_side=1, window=None):
    """Random Hermitian polynomial via sampled conjugate term pairs."""
    window = list(range(n)) if window is None else list(window)
    local = monomial_basis(len(window), max_side)

    def embed(e):
        amb = [0] * n
        for i, v in zip(window, e):
            amb[i] = v
        return tuple(amb)

    p = Poly.zero(n)
    for _ in range(n_terms):
        beta = embed(local[rng.integers(0, len(local))])
        gamma = embed(local[rng.integers(0, len(local))])
        c = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
        p = p + Poly.hermitian_term(n, beta, gamma, c)
    return p


def random_ball_cpop(n, rng, n_terms=5, max_side=2):
    """Random CPOP with a unit-ball constraint (always feasible and bounded)."""
    f = random_hermitian_poly(n, rng, n_terms=n_terms, max_side=max_side)
    while f.is_zero() or f.degree() == 0:
        f = random_hermitian_poly(n, rng, n_terms=n_terms, max_side=max_side)
    return CPOP(n=n, objective=f, ineqs=[ball_constraint(n, range(n))])


def random_qcqp(n, rng, extra_constraints=1):
    """Random complex QCQP on the unit ball (degree <= 2 everywhere)."""
    f = random_hermitian_poly(n, rng, n_terms=5, max_side=1)
    while f.is_zero() or f.degree() == 0:
        f = random_hermitian_poly(n, rng, n_terms=5, max_side=1)
    ineqs = [ball_constraint(n, range(n))]
    for _ in range(extra_constraints):
        g = random_hermitian_poly(n, rng, n_terms=3, max_side=1)
        # shift so the origin is strictly feasible
        v0 = g.evaluate([0.0] * n).real
        ineqs.append(g + Poly.constant(n, 1.0 - v0))
    return CPOP(n=n, objective=f, ineqs=ineqs)


def two_window_cpop(rng, n=4, deg_side=2):
    """Quartic objective over two overlapping windows with per-window balls."""
    w1, w2 = [0, 1, 2], [1, 2, 3]
    f = (random_hermitian_poly(n, rng, n_terms=4, max_side=deg_side, window=w1)
         + random_hermitian_poly(n, rng, n_terms=4, max_side=deg_side, window=w2))
    while f.degree() == 0:
        f = (random_hermitian_poly(n, rng, n_terms=4, max_side=deg_side, window=w1)
             + random_hermitian_poly(n, rng, n_terms=4, max_side=deg_side, window=w2))
    return CPOP(n=n, objective=f,
                ineqs=[ball_constraint(n, w1), ball_constraint(n, w2)])


def example_ball_cpop():
    """min z1 + conj(z1) subject to the two-variable unit ball."""
    n = 2
    f = Poly.variable(n, 0) + Poly.conj_variable(n, 0)
    return CPOP(n=n, objective=f, ineqs=[ball_constraint(n, [0, 1])])


def is_chordal_mcs(nodes, adj):
    """Maximum-cardinality-search chordality oracle, written independently
    of the library's elimination machinery."""
    nodes = list(nodes)
    weight = {v: 0 for v in nodes}
    order = []
    unnumbered = set(nodes)
    while unnumbered:
        v = max(sorted(unnumbered, key=nodes.index), key=lambda u: weight[u])
        order.append(v)
        unnumbered.discard(v)
        for w in adj[v]:
            if w in unnumbered:
                weight[w] += 1
    order.reverse()  # elimination order = reverse of MCS visit order
    rank = {v: i for i, v in enumerate(order)}
    for v in order:
        later = [w for w in adj[v] if rank[w] > rank[v]]
        if not later:
            continue
        pivot = min(later, key=lambda w: rank[w])
        for w in later:
            if w is not pivot and w not in adj[pivot]:
                return False
    return True


def eval_real(p: Poly, z) -> float:
    v = p.evaluate(z)
    assert abs(v.imag) <= 1e-9 * (1 + abs(v))
    return v.real


def feasible(cpop: CPOP, z, tol=1e-9) -> bool:
    if any(eval_real(g, z) < -tol for g in cpop.ineqs):
        return False
    return all(abs(eval_real(h, z)) <= tol for h in cpop.eqs)


def binom(a, b):
    return math.comb(a, b)

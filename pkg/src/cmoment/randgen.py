"""Seeded random test problems: quartic objectives on chained multi-balls.

An instance with l blocks has n = 5(l+1) variables.  Window j covers the
ten variables 5(j-1)..5(j-1)+9 (consecutive windows overlap in five), and
carries a Hermitian objective piece with exactly 40 terms (20 sampled
monomial pairs plus their conjugates) and a unit-ball constraint.
"""

from __future__ import annotations

import numpy as np

from .poly import CPOP, Pair, Poly, ball_constraint, monomial_basis

#: name of the RNG; reports print it next to the seed for reproducibility
RNG_NAME = "pcg64"


def random_window_poly(n: int, window: list[int], rng: np.random.Generator,
                       n_pairs: int = 20, max_side_degree: int = 2) -> Poly:
    """Hermitian polynomial supported on the window with 2*n_pairs terms.

    Pairs (beta, gamma) are drawn uniformly from the distinct non-diagonal
    canonical pairs with both one-sided degrees <= max_side_degree, so the
    total degree stays <= 2*max_side_degree; real and imaginary coefficient
    parts are uniform on [-1, 1].
    """
    local = monomial_basis(len(window), max_side_degree)

    def embed(e):
        amb = [0] * n
        for i, v in zip(window, e):
            amb[i] = v
        return tuple(amb)

    basis = [embed(e) for e in local]
    chosen: set[Pair] = set()
    terms: dict[Pair, complex] = {}
    while len(chosen) < n_pairs:
        a, b = rng.integers(0, len(basis), size=2)
        beta, gamma = basis[a], basis[b]
        if beta == gamma:
            continue
        key = (beta, gamma) if beta <= gamma else (gamma, beta)
        if key in chosen:
            continue
        c = complex(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0))
        if abs(c) < 1e-12:
            continue
        chosen.add(key)
        terms[key] = c
        terms[(key[1], key[0])] = c.conjugate()
    return Poly(n, terms)


def random_cpop(l: int, seed: int) -> CPOP:
    """The l-block multi-ball instance; deterministic under the seed."""
    if l < 1:
        raise ValueError("block count must be >= 1")
    n = 5 * (l + 1)
    rng = np.random.Generator(np.random.PCG64(seed))
    objective = Poly.zero(n)
    ineqs = []
    for j in range(l):
        window = list(range(5 * j, 5 * j + 10))
        objective = objective + random_window_poly(n, window, rng)
        ineqs.append(ball_constraint(n, window))
    return CPOP(n=n, objective=objective, ineqs=ineqs)

"""Polynomials in complex variables and their conjugates.

A monomial is a pair of exponent tuples (beta, gamma) standing for
z^beta * conj(z)^gamma.  A polynomial is a finite complex-coefficient
combination of such monomials.  Hermitian polynomials (coefficient of
(beta, gamma) equal to the conjugate of the coefficient of (gamma, beta))
are real-valued on C^n and are the admissible data for the optimization
problems handled by this package.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

Exponent = tuple[int, ...]
Pair = tuple[Exponent, Exponent]

#: coefficients with modulus below this are dropped on construction
COEFF_TOL = 1e-14


def zero_exponent(n: int) -> Exponent:
    return (0,) * n


def unit_exponent(n: int, i: int) -> Exponent:
    """Exponent of the single variable z_i (0-based)."""
    if not 0 <= i < n:
        raise ValueError(f"variable index {i} out of range for n={n}")
    e = [0] * n
    e[i] = 1
    return tuple(e)


def exponent_degree(e: Exponent) -> int:
    return sum(e)


def exponent_support(e: Exponent) -> frozenset[int]:
    """Indices of variables appearing in the exponent."""
    return frozenset(i for i, v in enumerate(e) if v)


def add_exponents(a: Exponent, b: Exponent) -> Exponent:
    return tuple(x + y for x, y in zip(a, b))


def canonical_pair(beta: Exponent, gamma: Exponent) -> Pair:
    """The lexicographically smaller orientation of {(beta,gamma), (gamma,beta)}."""
    return (beta, gamma) if beta <= gamma else (gamma, beta)


def monomial_basis(n: int, d: int) -> list[Exponent]:
    """All exponents in N^n of total degree <= d, in lexicographic order.

    The result has C(n+d, d) elements.
    """
    if n < 1:
        raise ValueError("need at least one variable")
    if d < 0:
        raise ValueError("degree must be nonnegative")

    def rec(k: int, remaining: int) -> list[tuple[int, ...]]:
        if k == 0:
            return [()]
        out = []
        for v in range(remaining + 1):
            for tail in rec(k - 1, remaining - v):
                out.append((v,) + tail)
        return out

    return sorted(rec(n, d))


class Poly:
    """A polynomial in (z, conj(z)) with complex coefficients.

    Terms are stored exactly as oriented (beta, gamma) pairs; for a
    Hermitian polynomial both orientations of every off-diagonal pair are
    present with conjugate coefficients.  Instances are treated as
    immutable: all arithmetic returns new objects.
    """

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Mapping[Pair, complex] | None = None):
        self.n = int(n)
        clean: dict[Pair, complex] = {}
        if terms:
            for (beta, gamma), c in terms.items():
                if len(beta) != self.n or len(gamma) != self.n:
                    raise ValueError("exponent length does not match variable count")
                c = complex(c)
                if abs(c) >= COEFF_TOL:
                    clean[(tuple(beta), tuple(gamma))] = c
        self.terms = clean

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, n: int) -> "Poly":
        return cls(n)

    @classmethod
    def constant(cls, n: int, c: complex) -> "Poly":
        z = zero_exponent(n)
        return cls(n, {(z, z): c})

    @classmethod
    def variable(cls, n: int, i: int) -> "Poly":
        """The polynomial z_i."""
        return cls(n, {(unit_exponent(n, i), zero_exponent(n)): 1.0})

    @classmethod
    def conj_variable(cls, n: int, i: int) -> "Poly":
        """The polynomial conj(z_i)."""
        return cls(n, {(zero_exponent(n), unit_exponent(n, i)): 1.0})

    @classmethod
    def hermitian_term(cls, n: int, beta: Exponent, gamma: Exponent, c: complex) -> "Poly":
        """c * z^beta conj(z)^gamma + conj(c) * z^gamma conj(z)^beta."""
        p = cls(n, {(tuple(beta), tuple(gamma)): c})
        return p + p.conjugate()

    # -- basic queries -----------------------------------------------------

    def support(self) -> set[Pair]:
        return set(self.terms)

    def coeff(self, beta: Exponent, gamma: Exponent) -> complex:
        return self.terms.get((tuple(beta), tuple(gamma)), 0.0 + 0.0j)

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        if not self.terms:
            return 0
        return max(exponent_degree(b) + exponent_degree(g) for b, g in self.terms)

    def half_degree(self) -> int:
        """ceil(degree / 2); rejects the zero polynomial."""
        if not self.terms:
            raise ValueError("half-degree of the zero polynomial is undefined")
        return (self.degree() + 1) // 2

    def one_sided_degree(self) -> int:
        """Largest total degree of a single side beta or gamma over all terms."""
        if not self.terms:
            return 0
        return max(max(exponent_degree(b), exponent_degree(g)) for b, g in self.terms)

    def variables(self) -> frozenset[int]:
        """Indices of all variables occurring in any term."""
        out: set[int] = set()
        for beta, gamma in self.terms:
            out |= exponent_support(beta)
            out |= exponent_support(gamma)
        return frozenset(out)

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other: "Poly") -> "Poly":
        if self.n != other.n:
            raise ValueError("variable counts differ")
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0.0) + c
        return Poly(self.n, out)

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-1.0) * other

    def __neg__(self) -> "Poly":
        return (-1.0) * self

    def __mul__(self, other):
        if isinstance(other, Poly):
            if self.n != other.n:
                raise ValueError("variable counts differ")
            out: dict[Pair, complex] = {}
            for (b1, g1), c1 in self.terms.items():
                for (b2, g2), c2 in other.terms.items():
                    k = (add_exponents(b1, b2), add_exponents(g1, g2))
                    out[k] = out.get(k, 0.0) + c1 * c2
            return Poly(self.n, out)
        c = complex(other)
        return Poly(self.n, {k: c * v for k, v in self.terms.items()})

    __rmul__ = __mul__

    def conjugate(self) -> "Poly":
        """Term (beta, gamma, c) maps to (gamma, beta, conj(c))."""
        return Poly(self.n, {(g, b): c.conjugate() for (b, g), c in self.terms.items()})

    def real_part(self) -> "Poly":
        return 0.5 * (self + self.conjugate())

    def imag_part(self) -> "Poly":
        return (-0.5j) * (self - self.conjugate())

    def is_hermitian(self) -> bool:
        for (b, g), c in self.terms.items():
            if self.terms.get((g, b)) != c.conjugate():
                return False
        return True

    def evaluate(self, point: Iterable[complex]) -> complex:
        pt = [complex(v) for v in point]
        if len(pt) != self.n:
            raise ValueError(f"point has length {len(pt)}, expected {self.n}")
        total = 0.0 + 0.0j
        for (beta, gamma), c in self.terms.items():
            m = c
            for i, e in enumerate(beta):
                if e:
                    m *= pt[i] ** e
            for i, e in enumerate(gamma):
                if e:
                    m *= pt[i].conjugate() ** e
            total += m
        return total

    # -- misc ----------------------------------------------------------------

    def sorted_terms(self) -> list[tuple[Pair, complex]]:
        return sorted(self.terms.items(), key=lambda kv: kv[0])

    def __eq__(self, other) -> bool:
        return isinstance(other, Poly) and self.n == other.n and self.terms == other.terms

    def __repr__(self) -> str:
        return f"Poly(n={self.n}, nterms={len(self.terms)})"


def hermitize(p: Poly) -> Poly:
    """Project onto the Hermitian part, (p + conj(p)) / 2."""
    return 0.5 * (p + p.conjugate())


@dataclass
class CPOP:
    """A polynomial optimization problem over complex variables.

    Minimize a Hermitian polynomial objective subject to Hermitian
    inequality constraints g_j >= 0 and equality constraints h_i = 0.
    """

    n: int
    objective: Poly
    ineqs: list[Poly] = field(default_factory=list)
    eqs: list[Poly] = field(default_factory=list)

    def __post_init__(self):
        for name, p in [("objective", self.objective)] + [
            (f"ineq[{j}]", g) for j, g in enumerate(self.ineqs)
        ] + [(f"eq[{i}]", h) for i, h in enumerate(self.eqs)]:
            if p.n != self.n:
                raise ValueError(f"{name}: variable count {p.n} != {self.n}")
            if not p.is_hermitian():
                raise ValueError(f"{name}: polynomial is not Hermitian")

    @property
    def ineq_half_degrees(self) -> list[int]:
        return [g.half_degree() for g in self.ineqs]

    @property
    def d_min(self) -> int:
        """Smallest admissible relaxation order."""
        degs = [self.objective.half_degree() if not self.objective.is_zero() else 0]
        degs += self.ineq_half_degrees
        degs += [h.half_degree() for h in self.eqs]
        # one-sided degrees must also fit inside the moment matrix basis
        degs.append(self.objective.one_sided_degree())
        return max(degs + [1])

    def all_support(self) -> set[Pair]:
        """Union of the supports of the objective and every constraint."""
        supp = self.objective.support()
        for g in self.ineqs:
            supp |= g.support()
        for h in self.eqs:
            supp |= h.support()
        return supp

    # -- JSON interchange ----------------------------------------------------

    def to_json_dict(self) -> dict:
        def dump(p: Poly) -> list[dict]:
            return [
                {"beta": list(b), "gamma": list(g), "re": c.real, "im": c.imag}
                for (b, g), c in p.sorted_terms()
            ]

        return {
            "n": self.n,
            "objective": dump(self.objective),
            "ineq": [dump(g) for g in self.ineqs],
            "eq": [dump(h) for h in self.eqs],
        }

    def save(self, path: str) -> None:
        with open(path, "w") as f:
            json.dump(self.to_json_dict(), f, indent=1)
            f.write("\n")

    @classmethod
    def from_json_dict(cls, data: dict) -> "CPOP":
        try:
            n = int(data["n"])
            raw_obj = data["objective"]
            raw_ineq = data.get("ineq", [])
            raw_eq = data.get("eq", [])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed CPOP data: {exc}") from exc

        def parse(raw_terms: list, what: str) -> Poly:
            terms: dict[Pair, complex] = {}
            for t in raw_terms:
                key = (tuple(int(v) for v in t["beta"]), tuple(int(v) for v in t["gamma"]))
                terms[key] = terms.get(key, 0.0) + complex(float(t["re"]), float(t["im"]))
            p = Poly(n, terms)
            if not p.is_hermitian():
                raise ValueError(f"{what}: terms violate Hermitian closure")
            return p

        obj = parse(raw_obj, "objective")
        ineqs = [parse(r, f"ineq[{j}]") for j, r in enumerate(raw_ineq)]
        eqs = [parse(r, f"eq[{i}]") for i, r in enumerate(raw_eq)]
        return cls(n=n, objective=obj, ineqs=ineqs, eqs=eqs)

    @classmethod
    def load(cls, path: str) -> "CPOP":
        with open(path) as f:
            return cls.from_json_dict(json.load(f))


def ball_constraint(n: int, var_indices: Iterable[int], radius_sq: float = 1.0) -> Poly:
    """1 * radius_sq - sum |z_i|^2 over the given variables."""
    p = Poly.constant(n, radius_sq)
    for i in var_indices:
        e = unit_exponent(n, i)
        p = p - Poly(n, {(e, e): 1.0})
    return p


def binomial(a: int, b: int) -> int:
    return math.comb(a, b)

"""Walk through the term-sparsity iteration on a two-variable problem.

We minimize z1 + conj(z1) on the unit ball |z1|^2 + |z2|^2 <= 1.  At
relaxation order 2 the dense moment matrix is 6x6 (basis 1, z2, z2^2, z1,
z1 z2, z1^2).  The iterated support-extension chain splits that basis into
much smaller blocks, and the sign symmetries of the problem tell us how
fine the splitting may legally get.
"""

from cmoment import sparsity as sp
from cmoment.poly import CPOP, Poly, ball_constraint

n = 2
f = Poly.variable(n, 0) + Poly.conj_variable(n, 0)
cpop = CPOP(n=n, objective=f, ineqs=[ball_constraint(n, [0, 1])])

names = {(0, 0): "1", (1, 0): "z1", (2, 0): "z1^2",
         (0, 1): "z2", (1, 1): "z1*z2", (0, 2): "z2^2"}


def show(blocks):
    return " | ".join("{" + ", ".join(names[e] for e in c) + "}" for c in blocks)


pattern = sp.dense_pattern(cpop)
print("support pairs:", sorted(cpop.all_support()))

for k in (1, 2, "auto"):
    tp = sp.term_pattern(cpop, pattern, orders=[2], k=k, extension="max")
    blocks = tp.owners[(0, None)].cliques
    print(f"k={k!s:4} stabilized={tp.stabilized!s:5} moment blocks: {show(blocks)}")

sym = sp.sign_symmetries(cpop.all_support(), n)
print("\nsign-symmetry basis:", sym.basis)
tp = sp.term_pattern(cpop, pattern, orders=[2], k="auto", extension="max")
partition = sp.sign_symmetry_partition(sym, tp.owners[(0, None)].nodes)
print("sign-symmetry partition:", show([tuple(b) for b in partition]))
print("\nThe stabilized blocks strictly refine the sign-symmetry partition:")
print("three blocks versus two.")

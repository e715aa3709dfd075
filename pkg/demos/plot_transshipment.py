"""
Ergodic transshipment
=====================

With the additive eigenfunction ``V`` and per-word sub-actions ``U_y`` the
cost ``C(y, x) = A(y, x) + U_y(x) - U_y(sigma x)`` is tabulated exactly.
Maximizing ``int C d eta`` over probabilities with equal past/future word
marginals returns the same constant ``c`` as the zero-temperature limit.
"""

from effpot import build_sft, builtin_potential, verify_triple_equality, zero_temperature
from effpot.ergopt import support_cycles

full = build_sft(2, [[1, 1], [1, 1]])
A = builtin_potential(full, "sum", x_values=[0.0, 1.0], y_values=[0.0, 0.5])

zt = zero_temperature(A)
rep = verify_triple_equality(A, zt)
print("c (max-plus)     ", rep.c_maxplus)
print("kappa (LP)       ", rep.kappa)
print("cycle value of C ", rep.cycle_value)
print("c (extrapolated) ", rep.c_extrapolated)
print("verdict", rep.to_dict()["verdict"])

print("optimal eta support")
for y, x, mass in rep.transshipment.support:
    print(f"  y={y} x={x} mass={mass}")
print("support as cycles on past words", support_cycles(rep.costs, rep.transshipment))

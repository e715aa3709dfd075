"""
Zero temperature
================

Scaling the observable by ``beta`` and letting ``beta`` grow, ``lambda / beta``
converges to the additive eigenvalue ``c`` of the max-plus operator
``Q(phi)(w) = max_mu int (A(w, .) + phi) dmu``.  The sweep below uses
``beta = 1, 2, 4, ..., 4096``; the largest values run in the log domain.
"""

from effpot import build_sft, builtin_potential, zero_temperature
from effpot.zerotemp import accumulation_values, concentration

full = build_sft(2, [[1, 1], [1, 1]])
golden = build_sft(2, [[1, 1], [1, 0]])

A = builtin_potential(golden, "x_only", values=[0.0, 1.0])
zt = zero_temperature(A)
print(f"{'beta':>8} {'lambda/beta':>20} {'Lip(phi/beta)':>14}")
for r in zt.rows:
    print(f"{r.beta:8.0f} {r.lambda_over_beta:20.15f} {r.lip_phi_over_beta:14.6f}")
print("extrapolated c", zt.c_extrapolated)
print("max-plus c    ", zt.c_maxplus)
print("per-word maximizing values", accumulation_values(A, zt.V))

# The diagonal observable rewards x0 == y0; at large beta each effective
# probability sits on the fixed point matching the past.
D = builtin_potential(full, "diagonal", eps=1.0)
zt = zero_temperature(D, grid=[1.0])
masses, cycles = concentration(D, 2.0**12, zt.V)
for w, m in zip(D.y_table.words, masses):
    print(f"past {w}: mass on matching fixed point {m:.6f}")

"""
Pressure, equilibrium states and the Gibbs property
===================================================

The golden-mean shift forbids the word ``22``.  Its entropy is the log of
the golden ratio, and the equilibrium state of the zero potential is the
Parry measure.
"""

import math

import numpy as np

from effpot import build_sft, equilibrium, gibbs_quotient_profile, ks_entropy, pressure
from effpot.potentials import XPotential

golden = build_sft(2, [[1, 1], [1, 0]])
psi = XPotential(golden, 1, [0.0, 0.0])

res = pressure(golden, psi)
print(f"pressure        {res.pressure:.15f}")
print(f"log golden      {math.log((1 + math.sqrt(5)) / 2):.15f}")

mu = equilibrium(golden, psi)
print("transitions\n", mu.P)
print(f"entropy         {ks_entropy(mu):.15f}")

# A nonzero potential: the equilibrium state moves mass towards symbol 2,
# and the ratio mu[u] / exp(S_n psi(u) - (n+1) P) stays within fixed bounds.
psi = XPotential(golden, 1, [0.0, 1.3])
mu = equilibrium(golden, psi)
print("stationary", np.round(mu.pi, 6))
for n, lo, hi, mass in gibbs_quotient_profile(golden, psi, mu, 8):
    print(f"n={n}  min={lo:.12f}  max={hi:.12f}  smallest cylinder={mass:.3e}")

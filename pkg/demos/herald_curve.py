"""
Herald probability of the equal superposition
=============================================

The dark outcome of the mid-circuit measurement heralds the even
superposition. Its probability follows from the constituent overlap.
"""

import math

import numpy as np

from hybridosc.sequence import build_named_circuit, execute

# the echoed k=2 circuit, noiseless, on a Fock space large enough for |zeta| <= 1.7
print(f"{'|zeta|':>7} {'p_even':>10} {'closed form':>12}")
for z in np.linspace(0, 1.7, 9):
    r = execute(build_named_circuit("equal_superposition", {"zeta": z, "n_max": 400}))
    closed = (2 + 2 / math.sqrt(math.cosh(2 * z))) / 4
    print(f"{z:7.3f} {r.herald_probability:10.6f} {closed:12.6f}")

# the odd herald is the complement; at zeta = 0 it cannot fire at all
odd = execute(build_named_circuit("equal_superposition", {"zeta": 1.12, "parity": "odd", "n_max": 160}))
print("odd herald at 1.12:", round(odd.herald_probability, 6))

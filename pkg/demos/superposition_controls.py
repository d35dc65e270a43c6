"""
Steering the superposition
==========================

The pulse angle theta sets the constituent weights, the echo phase gamma
swaps even and odd, and the qutrit circuit places the second constituent
anywhere on the circle e^{2i phi} zeta.
"""

import math

import numpy as np

from hybridosc import analysis, cli
from hybridosc.fock import generalized_squeezed_state
from hybridosc.sequence import build_named_circuit, execute

zeta, n_max = 1.12, 160

# theta = pi/4 leaves an amplitude ratio of cot(pi/8) = sqrt(2) + 1
r = execute(build_named_circuit("equal_superposition", {"zeta": zeta, "theta": math.pi / 4, "n_max": n_max}))
psi = np.linalg.eigh(r.state.oscillator())[1][:, -1]
basis = np.stack([generalized_squeezed_state(2, zeta, n_max), generalized_squeezed_state(2, -zeta, n_max)], axis=1)
(a, b), *_ = np.linalg.lstsq(basis, psi, rcond=None)
print("amplitude ratio", abs(a / b), "expected", math.sqrt(2) + 1)

# gamma = pi/2 moves the even state onto the bright outcome
for gamma in (0.0, math.pi / 2):
    even = execute(build_named_circuit("equal_superposition", {"zeta": zeta, "gamma": gamma, "n_max": n_max}))
    print(f"gamma={gamma:.3f}: dark herald {even.herald_probability:.5f}")

# symmetry of chi on the unit circle: 2 lobes for phi in {0, pi}, 4 for phi = pi/2
cfg = cli.load_preset("fig3c")
for phi in (0.0, math.pi / 4, math.pi / 2, math.pi):
    row = cli.sweep_row(cfg, "phi", phi, idle=False)
    print(f"phi={phi:.3f}: {row['n_maxima']} maxima at {row['maxima_args']}")

# Fock support of the odd trisqueezed superposition sits on 3, 9, 15, ...
tri = cli.run_config(cli.load_preset("fig2e"))
print("k=3 odd lattice", analysis.lattice(3, "odd", 20), "off-lattice mass", analysis.off_lattice_mass(tri.state, 3, "odd"))

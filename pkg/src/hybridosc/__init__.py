"""Simulation of a harmonic oscillator coupled to a spin-1/2 or qutrit.

Covers spin-conditioned generalised squeezing, mid-circuit heralding,
characteristic-function tomography and Wigner negativity metrics.
"""

__version__ = "0.1.0"

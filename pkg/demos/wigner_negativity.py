"""
Wigner negativity of even and odd squeezed superpositions
=========================================================

Exact characteristic-function tomography, Fourier reconstruction, and the
windowed logarithmic negativity. Set ``NOISE = True`` for the thermal start
and motional heating (slow for the odd state).
"""

from dataclasses import replace

from hybridosc import analysis, cli

NOISE = False

for preset in ("fig2b", "fig2c"):
    cfg = replace(cli.load_preset(preset), noise=NOISE)
    result = cli.run_config(cfg)
    m, wg = analysis.metrics_for_state(result.state, result.herald_probability)
    print(f"{preset}: zeta={abs(cfg.zeta)} {cfg.parity}")
    print(f"  herald probability  {m.herald_probability:.4f}")
    print(f"  WLN windowed / full {m.wln:.3f} / {m.wln_unwindowed:.3f}  (window half-width {m.window:.2f})")
    print(f"  min W               {m.min_w:.4f}")
    print(f"  quadrature variances {m.var_x:.4f}, {m.var_p:.3f}")

# the same numbers come out of `hybridosc wigner --preset fig2b --exact`

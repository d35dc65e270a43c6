"""Characteristic-function tomography and Wigner reconstruction.

``chi(beta) = Tr[rho D(beta)]`` with ``beta = beta_r + i beta_i``. Grids are
indexed ``[i_r, i_i]`` (real part first); Wigner grids are indexed ``[i_x, i_p]``
in the quadrature convention of :mod:`hybridosc.fock`.
"""

from dataclasses import dataclass, replace
import csv
import io
import json
import math

import numpy as np
import scipy.linalg
from scipy import ndimage

from .detection import detection_error_probs
from .errors import AliasError, DomainError
from .evolution import displacement_raw, spin_rotation_raw
from .fock import DEFAULT_LEAK_TOL, HybridState, annihilation, check_leakage

DEFAULT_BETA_MAX = 6.0
DEFAULT_POINTS = 201


def _axis(extent, n):
    return np.linspace(-extent, extent, n)


def _trap_weights(v):
    w = np.full(v.size, v[1] - v[0])
    w[0] = w[-1] = w[0] / 2
    return w


def _read_header(lines):
    rows = list(csv.reader(ln for ln in lines if not ln.startswith("#")))
    if len(rows) < 3 or rows[0][0] != "extent" or rows[1][0] != "N":
        raise DomainError("grid CSV must start with 'extent' and 'N' header rows")
    return float(rows[0][1]), int(rows[1][1]), rows[2], rows[3:]


@dataclass(frozen=True, eq=False)
class CharGrid:
    beta_max: float
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] % 2 == 0:
            raise DomainError("characteristic grid must be square with an odd number of points")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def betas(self):
        return _axis(self.beta_max, self.n)

    @property
    def spacing(self):
        return 2 * self.beta_max / (self.n - 1)

    def at_origin(self):
        c = self.n // 2
        return complex(self.values[c, c])

    def hermitian_defect(self):
        """``max |chi(-beta) - chi(beta)*|`` over the grid."""
        return float(np.max(np.abs(self.values[::-1, ::-1] - self.values.conj())))

    def to_csv(self):
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["extent", repr(float(self.beta_max))])
        w.writerow(["N", self.n])
        w.writerow(["beta_re", "beta_im", "re", "im"])
        b = self.betas
        for i, br in enumerate(b):
            for j, bi in enumerate(b):
                z = self.values[i, j]
                w.writerow([repr(float(br)), repr(float(bi)), repr(float(z.real)), repr(float(z.imag))])
        return out.getvalue()

    @classmethod
    def from_csv(cls, text):
        extent, n, _, rows = _read_header(text.splitlines())
        vals = np.array([complex(float(r[2]), float(r[3])) for r in rows]).reshape(n, n)
        return cls(extent, vals)

    def to_dict(self):
        return {
            "extent": self.beta_max,
            "N": self.n,
            "re": self.values.real.tolist(),
            "im": self.values.imag.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["extent"], np.asarray(d["re"]) + 1j * np.asarray(d["im"]))


@dataclass(frozen=True, eq=False)
class WignerGrid:
    """Real Wigner values on ``[-x_max, x_max]^2``.

    ``excluded_mass`` records quasi-probability removed by windowing so that
    downstream metrics can account for it; ``window`` is the half-width kept
    (``None`` when unwindowed).
    """

    x_max: float
    values: np.ndarray
    excluded_mass: float = 0.0
    window: float = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise DomainError("Wigner grid must be square")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def m(self):
        return self.values.shape[0]

    @property
    def xs(self):
        return _axis(self.x_max, self.m)

    @property
    def spacing(self):
        return 2 * self.x_max / (self.m - 1)

    def integrate(self, f=None):
        """Trapezoid integral of ``W`` (or of ``f`` evaluated on this grid)."""
        v = self.values if f is None else f
        return float(np.trapezoid(np.trapezoid(v, self.xs, axis=1), self.xs))

    def value_at(self, x, p):
        """Bilinear interpolation at a phase-space point."""
        idx = (np.array([x, p]) + self.x_max) / self.spacing
        return float(ndimage.map_coordinates(self.values, idx.reshape(2, 1), order=1)[0])

    def to_csv(self):
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["extent", repr(float(self.x_max))])
        w.writerow(["N", self.m])
        w.writerow(["x", "p", "w"])
        xs = self.xs
        for i, x in enumerate(xs):
            for j, p in enumerate(xs):
                w.writerow([repr(float(x)), repr(float(p)), repr(float(self.values[i, j]))])
        return out.getvalue()

    @classmethod
    def from_csv(cls, text):
        extent, m, _, rows = _read_header(text.splitlines())
        vals = np.array([float(r[2]) for r in rows]).reshape(m, m)
        return cls(extent, vals)

    def to_dict(self):
        return {
            "extent": self.x_max,
            "N": self.m,
            "w": self.values.tolist(),
            "excluded_mass": self.excluded_mass,
            "window": self.window,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["extent"], np.asarray(d["w"]), d.get("excluded_mass", 0.0), d.get("window"))

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def _osc(state):
    if isinstance(state, HybridState):
        return state.oscillator()
    rho = np.asarray(state, dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    return rho


def _padded(rho, pad):
    n = rho.shape[0]
    out = np.zeros((n + pad, n + pad), dtype=complex)
    out[:n, :n] = rho
    return out


def _default_pad(n, beta_abs):
    return max(60, n // 2) + int(math.ceil(4 * beta_abs**2))


def char_fn_exact(state, beta, pad=None, leak_tol=DEFAULT_LEAK_TOL):
    """``Tr[rho D(beta)]`` by a matrix exponential on a padded Fock space."""
    rho = _osc(state)
    beta = complex(beta)
    if pad is None:
        pad = _default_pad(rho.shape[0], abs(beta))
    big = _padded(rho, pad)
    a = annihilation(big.shape[0] - 1)
    d = scipy.linalg.expm(beta * a.conj().T - np.conj(beta) * a)
    check_leakage(np.abs(d[:, 0]) ** 2, leak_tol, f"D({beta:.3g})|0>")
    return complex(np.trace(big @ d))


def _char_separable(rho, br, bi, pad):
    """chi on the outer grid ``br x bi`` via quadrature eigenbases.

    ``D(beta) = exp(i sqrt2 beta_i x) exp(-i sqrt2 beta_r p) exp(-i beta_r beta_i)``,
    so one eigendecomposition of x and of p serves the whole grid.
    """
    big = _padded(rho, pad)
    a = annihilation(big.shape[0] - 1)
    x = (a + a.conj().T) / math.sqrt(2)
    p = (a - a.conj().T) / (1j * math.sqrt(2))
    lx, ux = np.linalg.eigh(x)
    lp, up = np.linalg.eigh(p)
    k = (ux.conj().T @ up) * (up.conj().T @ big @ ux).T
    ex = np.exp(1j * math.sqrt(2) * np.outer(bi, lx))
    ep = np.exp(-1j * math.sqrt(2) * np.outer(br, lp))
    c = ex @ k @ ep.T  # [i_i, i_r]
    return (c * np.exp(-1j * np.outer(bi, br))).T


def char_grid_exact(state, beta_max=DEFAULT_BETA_MAX, n=DEFAULT_POINTS, pad=None):
    """Exact characteristic function on an ``n x n`` grid over ``[-beta_max, beta_max]^2``."""
    if n % 2 == 0:
        raise DomainError("grid size must be odd so that beta=0 is sampled")
    rho = _osc(state)
    if pad is None:
        pad = _default_pad(rho.shape[0], beta_max) // 2 + 100
    b = _axis(beta_max, n)
    return CharGrid(beta_max, _char_separable(rho, b, b, pad))


def wigner_grid_exact(state, x_max, m, pad=None):
    """Exact Wigner function via ``W(x, p) = chi_{Pi rho}(2 alpha) / pi``."""
    rho = _osc(state)
    par = (-1.0) ** np.arange(rho.shape[0])
    if pad is None:
        pad = _default_pad(rho.shape[0], math.sqrt(2) * x_max) // 2 + 100
    b = math.sqrt(2) * _axis(x_max, m)
    vals = _char_separable(par[:, None] * rho, b, b, pad)
    return WignerGrid(x_max, np.real(vals) / math.pi)


def wigner_parity_oracle(state, alpha, pad=None):
    """Displaced-parity Wigner value at ``alpha = (x + i p)/sqrt2``, by direct expm."""
    rho = _osc(state)
    alpha = complex(alpha)
    if pad is None:
        pad = _default_pad(rho.shape[0], abs(alpha))
    big = _padded(rho, pad)
    dim = big.shape[0]
    a = annihilation(dim - 1)
    d = scipy.linalg.expm(alpha * a.conj().T - np.conj(alpha) * a)
    shifted = d.conj().T @ big @ d
    par = (-1.0) ** np.arange(dim)
    return float(np.real(np.sum(par * np.diag(shifted)))) / math.pi


# -- sampled tomography -----------------------------------------------------


def protocol_dark_probability(state, beta, part="re"):
    """Dark probability of the characteristic-function readout.

    The spin starts in ``|1_s>`` next to the oscillator state; for ``part='im'``
    an ``R_y(pi/2)`` comes first. Then ``D(sigma_y beta/2)`` acts and the spin is
    read out. The result is ``(1 + Re chi)/2`` or ``(1 + Im chi)/2``.
    """
    if part not in ("re", "im"):
        raise DomainError("part must be 're' or 'im'")
    rho = _osc(state)
    beta = complex(beta)
    pad = _default_pad(rho.shape[0], abs(beta) / 2)
    big = _padded(rho, pad)
    n_max = big.shape[0] - 1
    spin = np.diag([0.0, 1.0]).astype(complex)
    x = np.kron(spin, big)
    if part == "im":
        x = spin_rotation_raw(x, 2, (0, 1), math.pi / 2, math.pi / 2)
    x = displacement_raw(x, 2, n_max, "y", beta / 2, leak_tol=None)
    n = n_max + 1
    return float(np.real(np.trace(x[n:, n:])))


def _estimate(k, shots, model):
    p_db, p_bd, flip = detection_error_probs(model) if model is not None else (0.0, 0.0, 0.0)
    contrast = 1.0 - p_bd - flip - p_db
    frac = np.asarray(k, dtype=float) / shots
    p_hat = (frac - p_db) / contrast
    est = 2 * p_hat - 1
    # Wilson-style adjusted proportion keeps the error bar nonzero at k=0 or k=shots
    p_adj = (np.asarray(k, dtype=float) + 1) / (shots + 2)
    stderr = 2 * np.sqrt(p_adj * (1 - p_adj) / shots) / contrast
    return est, stderr


def _observed(p, model):
    if model is None:
        return p
    p_db, p_bd, flip = detection_error_probs(model)
    return (1 - p_bd - flip) * p + p_db * (1 - p)


def char_fn_measured(state, beta, part="re", shots=300, seed=0, model=None):
    """Shot-sampled estimate of Re or Im chi(beta) with its standard error.

    ``shots=None`` returns the infinite-shot value (stderr 0). When a
    :class:`DetectionModel` is given its misclassification rates enter the
    sampled probability and are inverted in the estimator.
    """
    return sample_char_estimate(protocol_dark_probability(state, beta, part), shots, seed, model)


def sample_char_estimate(p_dark, shots=300, seed=0, model=None):
    """Estimate ``2 p_dark - 1`` from ``shots`` simulated readouts; returns ``(estimate, stderr)``."""
    if shots is None:
        return 2 * p_dark - 1, 0.0
    if shots <= 0:
        raise DomainError("shots must be positive")
    rng = np.random.Generator(np.random.Philox(seed))
    k = rng.binomial(shots, min(max(_observed(p_dark, model), 0.0), 1.0))
    est, err = _estimate(k, shots, model)
    return float(est), float(err)


def char_grid_measured(state, beta_max=DEFAULT_BETA_MAX, n=DEFAULT_POINTS, shots=300, seed=0, model=None):
    """Sampled characteristic-function grid, returned with its stderr grid.

    Uses the readout relations of :func:`protocol_dark_probability` applied to
    the exact grid; real and imaginary parts get independent shot budgets.
    """
    if shots <= 0:
        raise DomainError("shots must be positive")
    exact = char_grid_exact(state, beta_max, n).values
    rng = np.random.Generator(np.random.Philox(seed))
    p_re = np.clip(_observed((1 + exact.real) / 2, model), 0, 1)
    p_im = np.clip(_observed((1 + exact.imag) / 2, model), 0, 1)
    k_re = rng.binomial(shots, p_re)
    k_im = rng.binomial(shots, p_im)
    re, err_re = _estimate(k_re, shots, model)
    im, err_im = _estimate(k_im, shots, model)
    return CharGrid(beta_max, re + 1j * im), np.hypot(err_re, err_im)


# -- reconstruction and post-processing -------------------------------------


def alias_limit(char):
    """Largest output half-width free of Fourier aliasing."""
    return math.pi / (math.sqrt(2) * char.spacing)


def reconstruct_wigner(char, x_max=None, m=None):
    """Fourier-transform a characteristic grid into a Wigner grid.

    Evaluates ``W(alpha) = pi^-2 int chi(beta) exp(alpha beta* - alpha* beta) d^2 beta``
    with trapezoid weights and rescales to the (x, p) measure. Defaults to an
    output half-width ``2 beta_max`` on ``2N - 1`` points, pulled inside the
    alias limit on coarse grids.
    """
    limit = alias_limit(char)
    if x_max is None:
        x_max = min(2 * char.beta_max, 0.98 * limit)
    if m is None:
        m = 2 * char.n - 1
    if x_max >= limit:
        raise AliasError(f"output half-width {x_max:g} exceeds the alias limit {limit:.3f}")
    b = char.betas
    w = _trap_weights(b)
    a = _axis(x_max, m) / math.sqrt(2)
    # Im(alpha beta*) = a_i b_r - a_r b_i
    ep = np.exp(2j * np.outer(a, b)) * w
    ex = np.exp(-2j * np.outer(a, b)) * w
    vals = ex @ char.values.T @ ep.T
    return WignerGrid(x_max, np.real(vals) / (2 * math.pi**2))


def _window_mask(xs, half, shape):
    if shape == "square":
        inside = np.abs(xs) <= half + 1e-12
        return inside[:, None] & inside[None, :]
    if shape == "disk":
        return xs[:, None] ** 2 + xs[None, :] ** 2 <= half**2 + 1e-12
    raise DomainError("window shape must be 'square' or 'disk'")


def window_wigner(wg, mass_fraction=0.95, shape="square"):
    """Zero ``W`` outside the smallest centred window holding ``mass_fraction`` of its integral.

    The returned grid records the window half-width (radius for ``'disk'``) and
    the removed signed mass.
    """
    if not 0 < mass_fraction <= 1:
        raise DomainError("mass_fraction must lie in (0, 1]")
    if mass_fraction == 1:
        return wg
    xs = wg.xs
    total = wg.integrate()
    w = _trap_weights(xs)
    mass = (w[:, None] * w[None, :] * wg.values).ravel()
    if shape == "square":
        radius = np.maximum(np.abs(xs)[:, None], np.abs(xs)[None, :]).ravel()
    elif shape == "disk":
        radius = np.sqrt(xs[:, None] ** 2 + xs[None, :] ** 2).ravel()
    else:
        raise DomainError("window shape must be 'square' or 'disk'")
    # cumulative mass over points ordered by radius, read off at the last point of each tie
    order = np.argsort(radius, kind="stable")
    r_sorted = radius[order]
    cum = np.cumsum(mass[order])
    last = np.append(r_sorted[1:] - r_sorted[:-1] > 1e-12, True)
    hits = np.nonzero(last & (cum >= mass_fraction * total))[0]
    if hits.size == 0:
        return wg
    half = float(r_sorted[hits[0]])
    mask = _window_mask(xs, half, shape)
    vals = np.where(mask, wg.values, 0.0)
    kept = wg.integrate(vals)
    return replace(wg, values=vals, excluded_mass=wg.excluded_mass + total - kept, window=half)


def rotate_wigner(wg, angle):
    """Rotate the distribution by ``angle`` about the origin (bilinear interpolation)."""
    if angle == 0:
        return wg
    xs = wg.xs
    c, s = math.cos(angle), math.sin(angle)
    X, P = np.meshgrid(xs, xs, indexing="ij")
    # sample the source at the inverse-rotated point
    xs_src = c * X + s * P
    ps_src = -s * X + c * P
    coords = np.stack([(xs_src + wg.x_max) / wg.spacing, (ps_src + wg.x_max) / wg.spacing])
    vals = ndimage.map_coordinates(wg.values, coords, order=1, mode="constant", cval=0.0)
    return replace(wg, values=vals)

"""Scalar figures of merit: normalisation, Wigner negativity, variances, populations."""

from dataclasses import asdict, dataclass, field
import csv
import io
import json
import math

import numpy as np
import scipy.linalg

from .detection import (  # noqa: F401  re-exported
    DetectionModel,
    detection_error_probs,
    mixture_ratio,
    prep_error_for_spam,
    spam_dark_probability,
)
from .errors import CoverageError, DomainError
from .fock import DEFAULT_LEAK_TOL, annihilation, check_leakage, generalized_squeezed_state, quadratures
from .tomography import (
    DEFAULT_BETA_MAX,
    DEFAULT_POINTS,
    char_grid_exact,
    reconstruct_wigner,
    window_wigner,
    _default_pad,
    _osc,
    _padded,
)


def normalization_coeff_closed(zeta2_abs):
    """``(|N+|^2, |N-|^2)`` for the k=2 equal superposition."""
    if zeta2_abs < 0:
        raise DomainError("|zeta| must be >= 0")
    ov = 1.0 / math.sqrt(math.cosh(2 * zeta2_abs))
    return (2 + 2 * ov) / 4, (2 - 2 * ov) / 4


def constituent_overlap(k, zeta, n_max, leak_tol=1e-8):
    """Brute-force ``<-zeta_k|zeta_k>`` from truncated generators."""
    plus = generalized_squeezed_state(k, zeta, n_max, leak_tol)
    minus = generalized_squeezed_state(k, -complex(zeta), n_max, leak_tol)
    return complex(np.vdot(minus, plus))


def normalization_coeff_numeric(k, zeta, n_max, leak_tol=1e-8):
    ov = constituent_overlap(k, zeta, n_max, leak_tol).real
    return (2 + 2 * ov) / 4, (2 - 2 * ov) / 4


def _trap2(wg, f):
    xs = wg.xs
    return float(np.trapezoid(np.trapezoid(f, xs, axis=1), xs))


def abs_mass(wg):
    """Integrated ``|W|`` plus any signed mass a window removed."""
    return _trap2(wg, np.abs(wg.values)) + wg.excluded_mass


def wln(wg, coverage=0.99):
    """Wigner logarithmic negativity ``log int |W|`` (natural log).

    A windowed grid counts its removed mass as positive, which keeps the
    vacuum at zero and makes the windowed value a lower bound of the
    unwindowed one. Raises :class:`CoverageError` when the grid plus removed
    mass holds less than ``coverage`` of a unit-normalised distribution.
    """
    covered = wg.integrate() + wg.excluded_mass
    if covered < coverage:
        raise CoverageError(f"grid holds {covered:.4f} of the distribution, need {coverage}")
    return math.log(abs_mass(wg))


def min_wigner(wg):
    return float(np.min(wg.values))


def _moments(wg):
    xs = wg.xs
    X, P = np.meshgrid(xs, xs, indexing="ij")
    norm = wg.integrate()
    mx = _trap2(wg, X * wg.values) / norm
    mp = _trap2(wg, P * wg.values) / norm
    cxx = _trap2(wg, (X - mx) ** 2 * wg.values) / norm
    cpp = _trap2(wg, (P - mp) ** 2 * wg.values) / norm
    cxp = _trap2(wg, (X - mx) * (P - mp) * wg.values) / norm
    return np.array([[cxx, cxp], [cxp, cpp]])


def principal_angle(cov):
    """Angle of the minor principal axis of a 2x2 covariance matrix."""
    w, v = np.linalg.eigh(cov)
    u = v[:, 0]
    return math.atan2(u[1], u[0])


def quadrature_variances(wg, angle=None, align=True):
    """Variances of the two marginals of ``W``.

    Marginal moments are trapezoid integrals over the grid. With
    ``align=True`` the axes are rotated onto the principal axes of the
    second-moment matrix, minor axis first. Pass ``angle`` to measure along
    ``(cos a, sin a)`` and its orthogonal instead. The projection is done on
    the moments directly, so no interpolation enters.
    """
    cov = _moments(wg)
    if angle is None:
        if not align:
            return float(cov[0, 0]), float(cov[1, 1])
        angle = principal_angle(cov)
    u = np.array([math.cos(angle), math.sin(angle)])
    v = np.array([-u[1], u[0]])
    return float(u @ cov @ u), float(v @ cov @ v)


def operator_covariance(state):
    """Symmetrised covariance matrix of (x, p) from the density matrix."""
    rho = _osc(state)
    x, p = quadratures(rho.shape[0] - 1)
    ex = np.real(np.trace(rho @ x))
    ep = np.real(np.trace(rho @ p))
    xx = np.real(np.trace(rho @ x @ x)) - ex**2
    pp = np.real(np.trace(rho @ p @ p)) - ep**2
    xp = np.real(np.trace(rho @ (x @ p + p @ x))) / 2 - ex * ep
    return np.array([[xx, xp], [xp, pp]])


def operator_variances(state, angle=None):
    """Oracle for :func:`quadrature_variances` from operator moments."""
    cov = operator_covariance(state)
    if angle is None:
        angle = principal_angle(cov)
    u = np.array([math.cos(angle), math.sin(angle)])
    v = np.array([-u[1], u[0]])
    return float(u @ cov @ u), float(v @ cov @ v)


def fock_populations(state, n_cut=None):
    pops = np.real(np.diag(_osc(state)))
    if n_cut is not None:
        if n_cut >= pops.size:
            raise DomainError("n_cut must not exceed n_max")
        pops = pops[: n_cut + 1]
    return pops


def mean_phonon(state):
    pops = fock_populations(state)
    return float(np.dot(np.arange(pops.size), pops))


def lattice(k, parity, n_max):
    """Fock levels ``k*2n`` (even) or ``k*(2n+1)`` (odd) up to ``n_max``."""
    if parity not in ("even", "odd"):
        raise DomainError("parity must be even or odd")
    start = 0 if parity == "even" else k
    return np.arange(start, n_max + 1, 2 * k)


def off_lattice_mass(state, k, parity):
    pops = fock_populations(state)
    mask = np.ones(pops.size, dtype=bool)
    mask[lattice(k, parity, pops.size - 1)] = False
    return float(pops[mask].sum())


def count_angular_maxima(values):
    """Number of strict local maxima of a periodic sequence."""
    v = np.asarray(values, dtype=float)
    return int(np.sum((v > np.roll(v, 1)) & (v > np.roll(v, -1))))


def chi_ring(state, radius, samples=360):
    """Real part of chi on the circle ``|beta| = radius``.

    ``D(r e^{it}) = e^{itn} D(r) e^{-itn}``, so one matrix exponential serves
    the whole ring: chi is a Fourier sum over the diagonals of ``rho * D(r)^T``.
    """
    args = np.linspace(0, 2 * np.pi, samples, endpoint=False)
    rho = _osc(state)
    n = rho.shape[0]
    pad = _default_pad(n, radius)
    big = _padded(rho, pad)
    a = annihilation(big.shape[0] - 1)
    d = scipy.linalg.expm(radius * (a.conj().T - a))
    check_leakage(np.abs(d[:, 0]) ** 2, DEFAULT_LEAK_TOL, f"D({radius:.3g})|0>")
    m = big * d.T  # m[i, j] = rho_ij D_ji carries phase e^{it(j - i)}
    offsets = np.arange(-(n - 1), n)
    coeff = np.array([np.trace(m, offset=o) for o in offsets])
    vals = np.real(np.exp(1j * np.outer(args, offsets)) @ coeff)
    return args, vals


@dataclass
class MetricsReport:
    wln: float
    wln_unwindowed: float
    min_w: float
    var_x: float
    var_p: float
    mean_phonon: float
    fock_populations: list = field(default_factory=list)
    herald_probability: float = None
    window: float = None

    def to_dict(self):
        return asdict(self)

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def metrics_from_wigner(wg, state=None, herald_probability=None, mass_fraction=0.95, n_cut=20):
    windowed = window_wigner(wg, mass_fraction)
    var_x, var_p = quadrature_variances(wg)
    pops = [] if state is None else [float(p) for p in fock_populations(state)[: n_cut + 1]]
    return MetricsReport(
        wln=wln(windowed),
        wln_unwindowed=wln(wg),
        min_w=min_wigner(wg),
        var_x=var_x,
        var_p=var_p,
        mean_phonon=float("nan") if state is None else mean_phonon(state),
        fock_populations=pops,
        herald_probability=herald_probability,
        window=windowed.window,
    )


def metrics_for_state(state, herald_probability=None, beta_max=DEFAULT_BETA_MAX, n=DEFAULT_POINTS, mass_fraction=0.95):
    """Exact-characteristic-function tomography followed by the metric suite."""
    wg = reconstruct_wigner(char_grid_exact(state, beta_max, n))
    return metrics_from_wigner(wg, state, herald_probability, mass_fraction), wg


TABLE_HEADER = ["superposition", "mode", "wln", "min_w", "wln_unwindowed"]


def table_csv(rows):
    """Render ``(superposition, mode, wln, min_w, wln_unwindowed)`` rows as CSV."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(TABLE_HEADER)
    for r in rows:
        w.writerow([r[0], r[1]] + [f"{v:.6g}" for v in r[2:]])
    return out.getvalue()

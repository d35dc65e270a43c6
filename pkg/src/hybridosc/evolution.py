"""Spin rotations, spin-conditioned bosonic interactions and motional heating.

Public functions take and return :class:`~hybridosc.fock.HybridState`. The
``*_raw`` helpers work on a bare state vector (pure fast path) or density
matrix and are what the sequence executor calls in its inner loop.
"""

from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np
from scipy import sparse

from .errors import CPTPError, ConvergenceError, DomainError
from .fock import (
    DEFAULT_LEAK_TOL,
    HybridState,
    check_leakage,
    displacement,
    embed_spin_op,
    generalized_squeeze,
    spin_axis_matrix,
)

_AXES = ("x", "y", "z")


@dataclass(frozen=True)
class SDFSpec:
    """One spin-dependent force ``(Omega/2) sigma (a e^{-i(m Delta t + phi)} + h.c.)``.

    ``axis`` is 'x', 'y', 'z' or an angle in the spin xy-plane.
    """

    axis: object
    Omega: float
    Delta: float = 0.0
    m: int = 1
    phi: float = 0.0

    def __post_init__(self):
        if self.Omega < 0:
            raise DomainError("Omega must be >= 0")


@dataclass(frozen=True)
class NonlinearSpec:
    """Spin-conditioned generalised squeezing of order ``k``.

    The applied squeezing parameter is ``zeta * exp(i phi)``. ``echo`` names
    the axis ('x', 'y' or an xy-angle) of the refocusing pi pulse; ``None``
    applies the interaction in one piece.
    """

    k: int
    zeta: complex
    phi: float = 0.0
    cond: str = "z"
    echo: object = None

    def __post_init__(self):
        if self.k not in (1, 2, 3, 4):
            raise DomainError(f"order k must be in 1..4, got {self.k}")
        if self.cond not in _AXES:
            raise DomainError(f"conditioning basis must be x, y or z, got {self.cond!r}")

    @classmethod
    def from_coupling(cls, k, Omega_k, t, phi=0.0, cond="z", echo=None):
        return cls(k, complex(Omega_k * t), phi, cond, echo)

    @property
    def complex_zeta(self):
        return complex(self.zeta) * complex(math.cos(self.phi), math.sin(self.phi))


@dataclass(frozen=True)
class NoiseSpec:
    nbar0: float = 0.0
    ndot: float = 0.0
    enabled: bool = False

    def __post_init__(self):
        if self.ndot < 0:
            raise DomainError("heating rate must be >= 0")
        if self.nbar0 < 0:
            raise DomainError("nbar0 must be >= 0")

    @classmethod
    def experimental(cls):
        return cls(nbar0=0.1, ndot=300.0, enabled=True)


NOISELESS = NoiseSpec()


def effective_coupling(k, Omega_a, Omega_ap, Delta, theta):
    """Coupling of the order-k interaction synthesised from two detuned SDFs."""
    if Delta == 0:
        raise DomainError("detuning must be nonzero")
    base = {
        2: Omega_ap * Omega_a / Delta,
        3: Omega_ap * Omega_a**2 / (2 * Delta**2),
        4: Omega_ap * Omega_a**3 / (8 * Delta**3),
    }
    if k not in base:
        raise DomainError(f"order k must be 2, 3 or 4, got {k}")
    return base[k] * math.sin(theta)


def effective_spin_basis(k, sigma_a, sigma_ap):
    """Axis label of the synthesised interaction: commutator axis for even k, ``sigma_ap`` for odd k."""
    if sigma_a not in _AXES or sigma_ap not in _AXES:
        raise DomainError("spin axes must be 'x', 'y' or 'z'")
    if sigma_a == sigma_ap:
        raise DomainError(f"sigma_{sigma_a} commutes with itself")
    if k % 2 == 0:
        return next(ax for ax in _AXES if ax not in (sigma_a, sigma_ap))
    return sigma_ap


def _xy_angle(axis):
    if isinstance(axis, str):
        if axis == "x":
            return 0.0
        if axis == "y":
            return math.pi / 2
        raise DomainError("squeezing synthesis needs SDF axes in the spin xy-plane")
    return float(axis)


def synthesized_squeeze(sdf1, sdf2, t):
    """Leading-order effective ``NonlinearSpec`` for the k=2 two-SDF scheme.

    Requires ``sdf1.m == 1`` and ``sdf2.m == -1`` with a shared detuning and
    both forces in the spin xy-plane. The interaction is conditioned on
    ``sigma_z``; its phase follows from the second-order time average of the
    two forces.
    """
    if sdf1.m != 1 or sdf2.m != -1 or sdf1.Delta != sdf2.Delta:
        raise DomainError("k=2 synthesis needs m=1 and m=-1 at a common detuning")
    theta = _xy_angle(sdf2.axis) - _xy_angle(sdf1.axis)
    omega2 = effective_coupling(2, sdf1.Omega, sdf2.Omega, sdf1.Delta, theta)
    phase = sdf1.phi + sdf2.phi - math.pi / 2
    return NonlinearSpec(2, omega2 * t * complex(math.cos(phase), math.sin(phase)), cond="z")


# -- conditioned operators on raw arrays ------------------------------------


def spin_branches(axis, spin_dim):
    """Eigenbasis of ``axis`` on the {0,1} pair.

    Returns ``(W, signs)``: columns of ``W`` are spin eigenvectors and
    ``signs`` the eigenvalues (0 for the untouched level 2 of a qutrit).
    """
    sigma = spin_axis_matrix(axis)
    w, v = np.linalg.eigh(sigma)
    basis = np.eye(spin_dim, dtype=complex)
    basis[:2, :2] = v
    signs = np.zeros(spin_dim)
    signs[:2] = np.round(w)
    return basis, signs


def _spin_apply(x, spin_dim, u):
    """Apply a spin-only unitary ``u`` to a vector or density matrix."""
    n = x.shape[0] // spin_dim
    if x.ndim == 1:
        return (u @ x.reshape(spin_dim, n)).reshape(-1)
    full = np.kron(u, np.eye(n))
    return full @ x @ full.conj().T


def branch_unitary(spin_dim, basis, ops):
    """Full ``sum_b |e_b><e_b| (x) ops[b]``; ``None`` entries mean identity."""
    n = next(op.shape[0] for op in ops if op is not None) if any(op is not None for op in ops) else None
    if n is None:
        return None
    blocks = np.zeros((spin_dim, n, spin_dim, n), dtype=complex)
    for b, op in enumerate(ops):
        blocks[b, :, b, :] = np.eye(n) if op is None else op
    u = blocks.reshape(spin_dim * n, spin_dim * n)
    if not np.allclose(basis, np.eye(spin_dim)):
        w = np.kron(basis, np.eye(n))
        u = w @ u @ w.conj().T
    return u


def apply_unitary_raw(x, u):
    if u is None:
        return x
    if x.ndim == 1:
        return u @ x
    return u @ x @ u.conj().T


def apply_branch_ops_raw(x, spin_dim, basis, ops):
    """Apply ``sum_b |e_b><e_b| (x) ops[b]`` to a vector or density matrix."""
    return apply_unitary_raw(x, branch_unitary(spin_dim, basis, ops))


def rotation_matrix(spin_dim, pair, gamma, theta):
    """``exp(-i theta sigma_gamma / 2)`` on the spin pair, with ``sigma_gamma = cos g X + sin g Y``."""
    sigma = spin_axis_matrix(gamma)
    r2 = math.cos(theta / 2) * np.eye(2) - 1j * math.sin(theta / 2) * sigma
    u = embed_spin_op(r2, pair, spin_dim)
    return u


def spin_rotation_raw(x, spin_dim, pair, gamma, theta):
    return _spin_apply(x, spin_dim, rotation_matrix(spin_dim, pair, gamma, theta))


def raw_fock_populations(x, spin_dim):
    n = x.shape[0] // spin_dim
    if x.ndim == 1:
        return (np.abs(x.reshape(spin_dim, n)) ** 2).sum(axis=0)
    return np.real(np.einsum("iaia->a", x.reshape(spin_dim, n, spin_dim, n)))


# The guard is applied to the evolved state rather than to each branch
# operator, so an unpopulated branch (a hidden qutrit level, say) never trips it.


def nonlinear_raw(x, spin_dim, n_max, k, zeta, cond="z", leak_tol=DEFAULT_LEAK_TOL):
    basis, signs = spin_branches(cond, spin_dim)
    ops = [None if s == 0 else generalized_squeeze(k, s * zeta, n_max, None) for s in signs]
    out = apply_branch_ops_raw(x, spin_dim, basis, ops)
    check_leakage(raw_fock_populations(out, spin_dim), leak_tol, f"G_{k}({zeta:.3g})")
    return out


def displacement_raw(x, spin_dim, n_max, axis, alpha, leak_tol=DEFAULT_LEAK_TOL):
    basis, signs = spin_branches(axis, spin_dim)
    ops = [None if s == 0 else displacement(s * alpha, n_max, leak_tol=None) for s in signs]
    out = apply_branch_ops_raw(x, spin_dim, basis, ops)
    check_leakage(raw_fock_populations(out, spin_dim), leak_tol, f"D({alpha:.3g})")
    return out


# -- heating ---------------------------------------------------------------


@lru_cache(maxsize=16)
def _heating_generator(n, ndot):
    # Row-major vec: vec(A rho B) = (A kron B^T) vec(rho). Jump ops sqrt(ndot) a, sqrt(ndot) a^dag.
    a = sparse.diags(np.sqrt(np.arange(1, n, dtype=float)), 1, format="csr")
    ad = a.T.tocsr()
    eye = sparse.identity(n, format="csr")
    # truncated a a^dag = diag(1, ..., n-1, 0) keeps the generator in Lindblad form
    k = sparse.diags(np.arange(n, dtype=float) + np.append(np.arange(1, n, dtype=float), 0.0))
    gen = sparse.kron(a, a) + sparse.kron(ad, ad) - 0.5 * (sparse.kron(k, eye) + sparse.kron(eye, k))
    return (ndot * gen).tocsr()


def heating_raw(rho, spin_dim, ndot, t, steps=None):
    """Integrate the infinite-temperature heating dissipator with fixed-step RK4."""
    if ndot == 0 or t == 0:
        return rho
    if steps is None:
        steps = default_steps(t)
    n = rho.shape[0] // spin_dim
    gen = _heating_generator(n, float(ndot))
    # every spin block (s, s') evolves under the same oscillator generator
    r = rho.reshape(spin_dim, n, spin_dim, n).transpose(1, 3, 0, 2).reshape(n * n, spin_dim**2)
    h = t / steps
    for _ in range(steps):
        k1 = gen @ r
        k2 = gen @ (r + 0.5 * h * k1)
        k3 = gen @ (r + 0.5 * h * k2)
        k4 = gen @ (r + h * k3)
        r = r + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    out = r.reshape(n, n, spin_dim, spin_dim).transpose(2, 0, 3, 1).reshape(rho.shape)
    return 0.5 * (out + out.conj().T)


def default_steps(t, max_step=1e-6):
    """Step count for a duration ``t``: step ``min(max_step, t/100)``."""
    return max(100, math.ceil(t / max_step - 1e-9))


def _check_cptp(rho, tol=1e-7):
    lo = np.linalg.eigvalsh(rho).min()
    if lo < -tol:
        raise CPTPError(f"minimum eigenvalue {lo:.3e} below -{tol:g}")


# -- public HybridState API -------------------------------------------------


def _wrap(state, rho_or_vec):
    x = rho_or_vec
    if x.ndim == 1:
        x = np.outer(x, x.conj())
    return HybridState(state.spin_dim, state.n_max, x)


def apply_conditioned_nonlinear(state, spec, leak_tol=DEFAULT_LEAK_TOL):
    """Apply ``exp(-i sigma_beta (x) (zeta* a^k + zeta a^dag^k)/2)``.

    Acts on the {0,1} spin pair; a qutrit's ``|2_s>`` branch is left alone.
    When ``spec.echo`` is set the interaction is split into two halves around
    a pi pulse, with the oscillator phase of the second half advanced by pi
    so the conditioned interaction accumulates instead of cancelling.
    """
    rho = np.array(state.rho)
    z = spec.complex_zeta
    if spec.echo is None:
        rho = nonlinear_raw(rho, state.spin_dim, state.n_max, spec.k, z, spec.cond, leak_tol)
    else:
        if spec.cond != "z":
            raise DomainError("spin echo requires sigma_z conditioning")
        rho = nonlinear_raw(rho, state.spin_dim, state.n_max, spec.k, z / 2, "z", leak_tol)
        rho = spin_rotation_raw(rho, state.spin_dim, (0, 1), _echo_angle(spec.echo), math.pi)
        rho = nonlinear_raw(rho, state.spin_dim, state.n_max, spec.k, -z / 2, "z", leak_tol)
    return _wrap(state, rho)


def _echo_angle(echo):
    if isinstance(echo, str):
        if echo == "x":
            return 0.0
        if echo == "y":
            return math.pi / 2
        raise DomainError(f"echo axis must be x, y or an angle, got {echo!r}")
    return float(echo)


def apply_conditioned_displacement(state, axis, alpha, leak_tol=DEFAULT_LEAK_TOL):
    """Apply ``D(sigma_axis alpha)``: ``D(+alpha)`` on the +1 branch, ``D(-alpha)`` on the -1 branch."""
    rho = displacement_raw(np.array(state.rho), state.spin_dim, state.n_max, axis, alpha, leak_tol)
    return _wrap(state, rho)


def spin_rotation(state, pair, gamma, theta):
    """Rotate the spin pair by ``theta`` about ``cos(gamma) X + sin(gamma) Y``."""
    rho = spin_rotation_raw(np.array(state.rho), state.spin_dim, tuple(pair), gamma, theta)
    return _wrap(state, rho)


def apply_heating(state, ndot, t, steps=None, leak_tol=DEFAULT_LEAK_TOL):
    """Heat the oscillator at ``ndot`` quanta/s for ``t`` seconds."""
    rho = heating_raw(np.array(state.rho), state.spin_dim, ndot, t, steps)
    _check_cptp(rho)
    out = HybridState(state.spin_dim, state.n_max, rho)
    check_leakage(out.fock_populations(), leak_tol, "heated state")
    return out


# -- full two-SDF dynamics --------------------------------------------------


@dataclass
class _SDFTerm:
    sigma: np.ndarray
    half_omega: float
    freq: float
    phi: float
    extra: dict = field(default_factory=dict)


def _sdf_terms(sdfs, spin_dim):
    terms = []
    for s in sdfs:
        if s is None or s.Omega == 0:
            continue
        sigma = embed_spin_op(spin_axis_matrix(s.axis), (0, 1), spin_dim)
        if spin_dim == 3:
            sigma[2, 2] = 0.0
        terms.append(_SDFTerm(sigma, s.Omega / 2, s.m * s.Delta, s.phi))
    return terms


def _sdf_rhs(t, y, terms, sq):
    # y: (s, n, r); returns -i H(t) y
    out = np.zeros_like(y)
    lower = np.zeros_like(y)
    lower[:, :-1] = sq[1:, None] * y[:, 1:]
    raise_ = np.zeros_like(y)
    raise_[:, 1:] = sq[1:, None] * y[:, :-1]
    for term in terms:
        c = np.exp(-1j * (term.freq * t + term.phi))
        osc = c * lower + np.conj(c) * raise_
        out += term.half_omega * np.einsum("ij,jnr->inr", term.sigma, osc)
    return -1j * out


def _integrate_sdf(y, terms, t, steps, sq):
    dt = t / steps
    tau = 0.0
    for _ in range(steps):
        k1 = _sdf_rhs(tau, y, terms, sq)
        k2 = _sdf_rhs(tau + dt / 2, y + 0.5 * dt * k1, terms, sq)
        k3 = _sdf_rhs(tau + dt / 2, y + 0.5 * dt * k2, terms, sq)
        k4 = _sdf_rhs(tau + dt, y + dt * k3, terms, sq)
        y = y + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        tau += dt
    return y


def evolve_full_sdf(state, sdf1, sdf2, t, steps, verify=False, leak_tol=DEFAULT_LEAK_TOL):
    """Integrate the interaction-picture two-SDF Hamiltonian with fixed-step RK4.

    The density matrix is evolved through its eigen-ensemble, so mixed inputs
    cost one vector integration per significant eigenvector. With
    ``verify=True`` the run is repeated at twice the step count and a
    :class:`ConvergenceError` is raised if the fidelity moves by 1e-8 or more.
    """
    if t == 0:
        return state
    sd, n = state.spin_dim, state.n_max + 1
    w, v = np.linalg.eigh(state.rho)
    keep = w > 1e-14
    w, v = w[keep], v[:, keep]
    y0 = v.reshape(sd, n, -1)
    terms = _sdf_terms((sdf1, sdf2), sd)
    sq = np.sqrt(np.arange(n, dtype=float))
    y = _integrate_sdf(y0, terms, t, steps, sq).reshape(sd * n, -1)
    rho = (y * w) @ y.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    out = HybridState(sd, state.n_max, rho / np.real(np.trace(rho)))
    if verify:
        y2 = _integrate_sdf(y0, terms, t, 2 * steps, sq).reshape(sd * n, -1)
        rho2 = (y2 * w) @ y2.conj().T
        drift = abs(np.real(np.vdot(rho, rho2)) - np.real(np.vdot(rho2, rho2)))
        if drift >= 1e-8:
            raise ConvergenceError(f"step halving changed the fidelity by {drift:.2e}; raise steps")
    check_leakage(out.fock_populations(), leak_tol, "two-SDF evolution")
    return out

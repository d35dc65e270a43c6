"""Truncated Fock-space operators and the spin-oscillator state container.

Conventions used throughout the package:

* Fock levels ``0..n_max`` (dimension ``n_max + 1``).
* Spin levels are ordered ``|0_s>, |1_s>, |2_s>``; the hybrid tensor order is
  spin (x) oscillator, so the flat index is ``s * (n_max + 1) + n``.
* ``sigma_z = |1_s><1_s| - |0_s><0_s|``. ``sigma_x`` and ``sigma_y`` are the
  usual Pauli matrices in the ``(|0_s>, |1_s>)`` ordering, which makes
  ``R_y(pi/2)|0_s> = (|0_s> + |1_s>)/sqrt(2)``.
* Quadratures ``x = (a + a^dag)/sqrt(2)``, ``p = (a - a^dag)/(i sqrt(2))``;
  vacuum variance 1/2 and ``W_vac(0, 0) = 1/pi``.
"""

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
import scipy.linalg

from .errors import DomainError, LeakageError

DEFAULT_LEAK_TOL = 1e-8

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[-1, 0], [0, 1]], dtype=complex)
PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}


def annihilation(n_max):
    """Return the truncated lowering operator, ``<n-1|a|n> = sqrt(n)``."""
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    return np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), 1).astype(complex)


def creation(n_max):
    return annihilation(n_max).conj().T


def number(n_max):
    return np.diag(np.arange(n_max + 1, dtype=float)).astype(complex)


def parity(n_max):
    return np.diag((-1.0) ** np.arange(n_max + 1)).astype(complex)


def quadratures(n_max):
    """Return ``(x, p)`` in the package's quadrature convention."""
    a = annihilation(n_max)
    ad = a.conj().T
    return (a + ad) / math.sqrt(2), (a - ad) / (1j * math.sqrt(2))


def vacuum(n_max):
    v = np.zeros(n_max + 1, dtype=complex)
    v[0] = 1.0
    return v


def fock_vector(n, n_max):
    v = np.zeros(n_max + 1, dtype=complex)
    v[n] = 1.0
    return v


def band_size(n_max):
    """Number of top Fock levels watched by the leakage guard."""
    return max(1, math.ceil(0.1 * n_max))


def top_band_population(populations):
    """Population held in the top ``ceil(0.1 n_max)`` Fock levels."""
    populations = np.asarray(populations, dtype=float)
    return float(populations[-band_size(populations.size - 1):].sum())


def check_leakage(populations, tol=DEFAULT_LEAK_TOL, what="state"):
    """Raise :class:`LeakageError` if the top band holds ``>= tol``."""
    if tol is None:
        return
    leak = top_band_population(populations)
    if leak >= tol:
        n_max = len(populations) - 1
        raise LeakageError(
            f"{what}: population {leak:.3e} in the top {band_size(n_max)} Fock levels "
            f"exceeds {tol:.1e}; increase n_max (currently {n_max})"
        )


def is_hermitian(m, rtol=1e-12):
    m = np.asarray(m)
    scale = max(np.linalg.norm(m, 2), 1.0)
    return bool(np.max(np.abs(m - m.conj().T)) < rtol * scale)


def displacement(alpha, n_max, method="expm", leak_tol=DEFAULT_LEAK_TOL):
    """Displacement ``D(alpha) = exp(alpha a^dag - alpha* a)`` on the truncated space.

    ``method="expm"`` uses scaling-and-squaring on the anti-Hermitian generator;
    ``method="eigh"`` diagonalises the Hermitian matrix ``i (alpha a^dag - alpha* a)``.
    """
    a = annihilation(n_max)
    gen = alpha * a.conj().T - np.conj(alpha) * a
    if method == "expm":
        d = scipy.linalg.expm(gen)
    elif method == "eigh":
        w, v = np.linalg.eigh(1j * gen)
        d = (v * np.exp(-1j * w)) @ v.conj().T
    else:
        raise DomainError(f"unknown method {method!r}")
    check_leakage(np.abs(d[:, 0]) ** 2, leak_tol, f"D({alpha:.3g})|0>")
    return d


@lru_cache(maxsize=64)
def _squeeze_eig(k, n_max):
    # Real symmetric (a^k + a^dag^k)/2; the zeta phase is restored by a diagonal gauge.
    a = annihilation(n_max).real
    ak = np.linalg.matrix_power(a, k)
    w, v = np.linalg.eigh((ak + ak.T) / 2)
    w.setflags(write=False)
    v.setflags(write=False)
    return w, v


def generalized_squeeze(k, zeta, n_max, leak_tol=DEFAULT_LEAK_TOL):
    """``G_k(zeta) = exp(-i (zeta* a^k + zeta a^dag^k) / 2)``.

    ``k = 1`` gives a displacement by ``-i zeta / 2``; ``k = 2, 3, 4`` are
    squeezing, trisqueezing and quadsqueezing. The constituent
    ``|zeta_k>`` of a superposition (the ``|0_s>`` branch of the sigma_z-conditioned interaction)
    is ``G_k(-zeta)|0>``; see :func:`generalized_squeezed_state`.
    """
    if k not in (1, 2, 3, 4):
        raise DomainError(f"order k must be in 1..4, got {k}")
    zeta = complex(zeta)
    if zeta == 0:
        return np.eye(n_max + 1, dtype=complex)
    w, v = _squeeze_eig(k, n_max)
    gauge = np.exp(1j * np.arange(n_max + 1) * np.angle(zeta) / k)
    g = (v * np.exp(-1j * abs(zeta) * w)) @ v.T
    g = gauge[:, None] * g * gauge.conj()[None, :]
    check_leakage(np.abs(g[:, 0]) ** 2, leak_tol, f"G_{k}({zeta:.3g})|0>")
    return g


def generalized_squeezed_state(k, zeta, n_max, leak_tol=DEFAULT_LEAK_TOL):
    """Constituent ``|zeta_k>`` as produced on the ``|0_s>`` branch (sigma_z = -1)."""
    return generalized_squeeze(k, -complex(zeta), n_max, leak_tol)[:, 0]


def squeezed_vacuum_fock_amplitudes(zeta, n_cut, match_generator=False):
    """Closed-form Fock amplitudes of a squeezed vacuum, indices ``0..n_cut``.

    With ``match_generator=False`` this is the textbook expansion
    ``c_2n = (-e^{i arg zeta} tanh|zeta|)^n sqrt((2n)!) / (2^n n!) / sqrt(cosh|zeta|)``.
    ``G_2(zeta)|0>`` carries an extra relative phase ``i^n`` on ``c_2n``
    (it equals the textbook state at ``i zeta``); ``match_generator=True``
    applies that offset so the result equals ``G_2(zeta)|0>`` entrywise.
    """
    if n_cut < 2:
        raise DomainError("n_cut must be >= 2")
    zeta = complex(zeta)
    if match_generator:
        zeta = 1j * zeta
    r = abs(zeta)
    out = np.zeros(n_cut + 1, dtype=complex)
    ratio = -np.exp(1j * np.angle(zeta)) * math.tanh(r)
    # sqrt((2n)!)/(2^n n!) via a stable recurrence: f_n = f_{n-1} sqrt((2n-1)/(2n))
    coef = 1.0 / math.sqrt(math.cosh(r))
    term = complex(coef)
    for n in range(0, n_cut // 2 + 1):
        if n > 0:
            term *= ratio * math.sqrt((2 * n - 1) / (2 * n))
        out[2 * n] = term
    return out


def thermal_populations(nbar, n_max):
    """Boltzmann populations ``p_n ~ (nbar/(nbar+1))^n``, renormalised on 0..n_max."""
    if nbar < 0:
        raise DomainError("nbar must be >= 0")
    p = np.zeros(n_max + 1)
    if nbar == 0:
        p[0] = 1.0
        return p
    q = nbar / (nbar + 1.0)
    p = q ** np.arange(n_max + 1)
    return p / p.sum()


def thermal_state(nbar, n_max):
    return np.diag(thermal_populations(nbar, n_max)).astype(complex)


def embed_spin_op(sigma, pair, spin_dim):
    """Place a 2x2 operator on levels ``pair = (i, j)``; identity on the rest."""
    i, j = pair
    if i == j or not (0 <= i < spin_dim and 0 <= j < spin_dim):
        raise IndexError(f"invalid spin pair {pair} for spin_dim={spin_dim}")
    out = np.eye(spin_dim, dtype=complex)
    idx = [i, j]
    out[np.ix_(idx, idx)] = np.asarray(sigma, dtype=complex)
    return out


def spin_axis_matrix(axis):
    """2x2 Pauli for ``axis`` in {'x','y','z'} or an xy-plane angle (radians)."""
    if isinstance(axis, str):
        try:
            return PAULI[axis]
        except KeyError:
            raise DomainError(f"unknown spin axis {axis!r}") from None
    g = float(axis)
    return math.cos(g) * SIGMA_X + math.sin(g) * SIGMA_Y


def partial_trace_spin(rho, spin_dim):
    n = rho.shape[0] // spin_dim
    r4 = rho.reshape(spin_dim, n, spin_dim, n)
    return np.einsum("iaib->ab", r4)


def partial_trace_osc(rho, spin_dim):
    n = rho.shape[0] // spin_dim
    r4 = rho.reshape(spin_dim, n, spin_dim, n)
    return np.einsum("iaja->ij", r4)


@dataclass(frozen=True, eq=False)
class HybridState:
    """Density matrix of a spin (dimension 2 or 3) coupled to a truncated oscillator."""

    spin_dim: int
    n_max: int
    rho: np.ndarray

    def __post_init__(self):
        if self.spin_dim not in (2, 3):
            raise DomainError("spin_dim must be 2 or 3")
        dim = self.spin_dim * (self.n_max + 1)
        rho = np.asarray(self.rho, dtype=complex)
        if rho.shape != (dim, dim):
            raise DomainError(f"rho must be {dim}x{dim}, got {rho.shape}")
        if not np.all(np.isfinite(rho)):
            raise DomainError("rho has non-finite entries")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @classmethod
    def product(cls, spin, osc, spin_dim=None):
        """Build ``spin (x) osc`` from vectors or density matrices.

        ``spin`` may be an integer level, a state vector or a density matrix.
        """
        if isinstance(spin, (int, np.integer)):
            sd = spin_dim or 2
            if not 0 <= spin < sd:
                raise IndexError(f"spin level {spin} outside spin_dim={sd}")
            vec = np.zeros(sd, dtype=complex)
            vec[spin] = 1.0
            spin = vec
        spin = np.asarray(spin, dtype=complex)
        osc = np.asarray(osc, dtype=complex)
        if spin.ndim == 1:
            spin = np.outer(spin, spin.conj())
        if osc.ndim == 1:
            osc = np.outer(osc, osc.conj())
        return cls(spin.shape[0], osc.shape[0] - 1, np.kron(spin, osc))

    @classmethod
    def from_vector(cls, psi, spin_dim, n_max):
        psi = np.asarray(psi, dtype=complex).reshape(-1)
        return cls(spin_dim, n_max, np.outer(psi, psi.conj()))

    @property
    def dim(self):
        return self.spin_dim * (self.n_max + 1)

    def oscillator(self):
        """Reduced oscillator density matrix."""
        return partial_trace_spin(self.rho, self.spin_dim)

    def spin(self):
        """Reduced spin density matrix."""
        return partial_trace_osc(self.rho, self.spin_dim)

    def spin_populations(self):
        return np.real(np.diag(self.spin()))

    def fock_populations(self):
        return np.real(np.diag(self.oscillator()))

    def purity(self):
        return float(np.real(np.vdot(self.rho, self.rho)))

    def mean_phonon(self):
        pops = self.fock_populations()
        return float(np.dot(np.arange(pops.size), pops))

    def check(self, leak_tol=DEFAULT_LEAK_TOL, trace_tol=1e-9, herm_tol=1e-12, eig_tol=1e-9):
        """Validate the density-matrix invariants; raises on failure."""
        tr = np.real(np.trace(self.rho))
        if abs(tr - 1) > trace_tol:
            raise DomainError(f"trace {tr:.12f} differs from 1")
        if np.max(np.abs(self.rho - self.rho.conj().T)) > herm_tol:
            raise DomainError("rho is not Hermitian")
        if np.linalg.eigvalsh(self.rho).min() < -eig_tol:
            raise DomainError("rho has a negative eigenvalue")
        check_leakage(self.fock_populations(), leak_tol)
        return self

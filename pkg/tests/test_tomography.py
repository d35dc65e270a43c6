import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import erfinv

from hybridosc.detection import DetectionModel
from hybridosc.errors import AliasError, DomainError
from hybridosc.fock import HybridState, fock_vector, vacuum
from hybridosc.sequence import build_named_circuit, execute
from hybridosc.tomography import (
    CharGrid,
    WignerGrid,
    alias_limit,
    char_fn_exact,
    char_fn_measured,
    char_grid_exact,
    char_grid_measured,
    protocol_dark_probability,
    reconstruct_wigner,
    rotate_wigner,
    window_wigner,
    wigner_grid_exact,
    wigner_parity_oracle,
)

# half-widths holding 95% of the vacuum Wigner mass
SQUARE_95 = float(erfinv(math.sqrt(0.95)))  # 1.58137...
DISK_95 = math.sqrt(math.log(20))  # 1.73082...


@pytest.fixture(scope="module")
def even_state():
    return execute(build_named_circuit("equal_superposition", {"zeta": 1.12, "n_max": 160})).state


def test_char_fn_vacuum_and_fock1():
    for beta in (0.3, 1.0 - 0.4j, 2.2j):
        b2 = abs(beta) ** 2
        assert char_fn_exact(vacuum(20), beta) == pytest.approx(math.exp(-b2 / 2), abs=1e-12)
        assert char_fn_exact(fock_vector(1, 20), beta) == pytest.approx((1 - b2) * math.exp(-b2 / 2), abs=1e-12)


def test_char_grid_matches_pointwise(even_state):
    g = char_grid_exact(even_state, beta_max=3.0, n=21)
    assert g.at_origin() == pytest.approx(1.0, abs=1e-12)
    rng = np.random.default_rng(1)
    for i, j in rng.integers(0, 21, size=(6, 2)):
        beta = g.betas[i] + 1j * g.betas[j]
        assert abs(g.values[i, j] - char_fn_exact(even_state, beta)) < 1e-10
    assert g.hermitian_defect() < 1e-12


def test_char_grid_requires_odd_points():
    with pytest.raises(DomainError):
        char_grid_exact(vacuum(5), n=20)
    with pytest.raises(DomainError):
        CharGrid(1.0, np.zeros((4, 4)))


def test_wigner_exact_matches_parity_oracle(even_state):
    wg = wigner_grid_exact(even_state, 3.0, 13)
    for i, j in [(0, 0), (6, 6), (3, 9), (12, 5)]:
        x, p = wg.xs[i], wg.xs[j]
        assert wg.values[i, j] == pytest.approx(wigner_parity_oracle(even_state, (x + 1j * p) / math.sqrt(2)), abs=1e-10)


def test_reconstruction_vacuum_and_fock1():
    vac = reconstruct_wigner(char_grid_exact(vacuum(10), 6.0, 121))
    assert vac.integrate() == pytest.approx(1.0, abs=1e-6)
    assert vac.value_at(0, 0) == pytest.approx(1 / math.pi, abs=1e-6)
    one = reconstruct_wigner(char_grid_exact(fock_vector(1, 10), 6.0, 121))
    assert one.values.min() == pytest.approx(-1 / math.pi, abs=1e-3)


def test_alias_guard():
    g = char_grid_exact(vacuum(5), 2.0, 11)
    assert alias_limit(g) == pytest.approx(math.pi / (math.sqrt(2) * 0.4))
    with pytest.raises(AliasError):
        reconstruct_wigner(g, x_max=alias_limit(g) + 0.1)
    # default extent is clamped inside the limit
    assert reconstruct_wigner(g).x_max < alias_limit(g)


def test_csv_round_trips():
    g = char_grid_exact(fock_vector(1, 8), 2.0, 7)
    back = CharGrid.from_csv(g.to_csv())
    assert np.array_equal(back.values, g.values) and back.beta_max == g.beta_max
    w = reconstruct_wigner(g, 2.0, 9)
    text = w.to_csv()
    assert text.splitlines()[:3] == ["extent,2.0", "N,9", "x,p,w"]
    assert np.array_equal(WignerGrid.from_csv(text).values, w.values)
    assert np.array_equal(WignerGrid.from_dict(w.to_dict()).values, w.values)
    assert np.array_equal(CharGrid.from_dict(g.to_dict()).values, g.values)
    with pytest.raises(DomainError):
        CharGrid.from_csv("x,1\n")


def test_window_vacuum_half_widths():
    xs = np.linspace(-6, 6, 1201)
    X, P = np.meshgrid(xs, xs, indexing="ij")
    wg = WignerGrid(6.0, np.exp(-(X**2) - P**2) / math.pi)
    sq = window_wigner(wg, 0.95)
    assert sq.window == pytest.approx(SQUARE_95, abs=0.011)
    assert sq.excluded_mass == pytest.approx(0.05, abs=2e-3)
    disk = window_wigner(wg, 0.95, shape="disk")
    assert disk.window == pytest.approx(DISK_95, abs=0.011)
    assert window_wigner(wg, 1.0) is wg
    with pytest.raises(DomainError):
        window_wigner(wg, 0.0)


def test_rotate_wigner_quarter_turn():
    xs = np.linspace(-5, 5, 101)
    X, P = np.meshgrid(xs, xs, indexing="ij")
    wg = WignerGrid(5.0, np.exp(-(X**2) / 0.5 - 2 * P**2) / math.pi)
    rot = rotate_wigner(wg, math.pi / 2)
    # a quarter turn swaps the roles of x and p
    assert np.max(np.abs(rot.values - wg.values.T)) < 1e-9
    assert rotate_wigner(wg, 0) is wg


def test_protocol_probability_relations(even_state):
    beta = 0.7 - 0.3j
    chi = char_fn_exact(even_state, beta)
    assert protocol_dark_probability(even_state, beta) == pytest.approx((1 + chi.real) / 2, abs=1e-9)
    assert protocol_dark_probability(even_state, beta, "im") == pytest.approx((1 + chi.imag) / 2, abs=1e-9)
    with pytest.raises(DomainError):
        protocol_dark_probability(even_state, beta, "abs")


def test_measured_point_infinite_and_seeded():
    s = HybridState.product(0, fock_vector(1, 10))
    chi = char_fn_exact(s, 0.5)
    assert char_fn_measured(s, 0.5, shots=None) == (pytest.approx(chi.real, abs=1e-9), 0.0)
    assert char_fn_measured(s, 0.5, seed=4) == char_fn_measured(s, 0.5, seed=4)
    with pytest.raises(DomainError):
        char_fn_measured(s, 0.5, shots=0)


def test_measured_grid_statistics():
    g, err = char_grid_measured(vacuum(10), 2.0, 5, shots=300, seed=3)
    exact = char_grid_exact(vacuum(10), 2.0, 5).values
    assert np.all(err > 0)
    assert np.mean(np.abs(g.values - exact) / err) < 2.5


def test_measured_grid_detection_inversion():
    model = DetectionModel()
    means = []
    for seed in range(200):
        g, _ = char_grid_measured(vacuum(10), 1.0, 3, shots=300, seed=seed, model=model)
        means.append(g.at_origin().real)
    # the inverted estimator is unbiased despite the readout errors
    assert np.mean(means) == pytest.approx(1.0, abs=0.01)


@settings(max_examples=15, deadline=None)
@given(re=st.floats(-2, 2), im=st.floats(-2, 2), n=st.integers(0, 3))
def test_property_char_hermitian(re, im, n):
    psi = fock_vector(n, 12)
    beta = complex(re, im)
    assert char_fn_exact(psi, -beta) == pytest.approx(np.conj(char_fn_exact(psi, beta)), abs=1e-10)
    assert abs(char_fn_exact(psi, beta)) <= 1 + 1e-10


def test_csv_reader_skips_comment_lines():
    g = char_grid_exact(vacuum(4), 1.0, 3)
    back = CharGrid.from_csv("# config={}\n" + g.to_csv())
    assert np.array_equal(back.values, g.values)

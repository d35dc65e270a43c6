import math
from importlib import resources

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridosc.detection import DetectionModel, detection_error_probs, mixture_ratio
from hybridosc.errors import DomainError, HeraldImpossibleError, ParseError
from hybridosc.evolution import NOISELESS, NonlinearSpec, NoiseSpec, apply_heating
from hybridosc.fock import HybridState, generalized_squeezed_state, thermal_state
from hybridosc.sequence import (
    Init,
    Measure,
    Nonlinear,
    Rot,
    SdfDisplace,
    Sequence,
    Wait,
    build_named_circuit,
    execute,
    expand,
    format_sequence,
    idle_baseline,
    make_rng,
    parse_number,
    parse_sequence,
    sample_heralds,
    wrap_spin_echo,
)

# (2 +- 2/sqrt(cosh 2.24))/4, mpmath
P_EVEN_112 = 0.729418272073917
P_ODD_112 = 0.270581727926083

FIG1A = resources.files("hybridosc").joinpath("presets", "fig1a.seq").read_text()


def _osc_vector(state):
    """Leading eigenvector of the reduced oscillator state."""
    w, v = np.linalg.eigh(state.oscillator())
    return v[:, -1], w[-1]


def _overlap(psi, state):
    rho = state.oscillator()
    return float(np.real(np.vdot(psi, rho @ psi)))


def _superposition(a, za, b, zb, n_max, k=2, leak_tol=1e-8):
    psi = a * generalized_squeezed_state(k, za, n_max, leak_tol) + b * generalized_squeezed_state(k, zb, n_max, leak_tol)
    return psi / np.linalg.norm(psi)


def test_parse_rot_and_numbers():
    seq = parse_sequence("init nmax=10\nrot pair=01 axis=y theta=pi/2\n")
    rot = seq.instructions[1]
    assert rot == Rot((0, 1), math.pi / 2, math.pi / 2)
    assert parse_number("1.12i") == 1.12j
    assert parse_number("0.5+0.2i") == 0.5 + 0.2j
    assert parse_number("sqrt(2)*exp(i*pi/4)") == pytest.approx(1 + 1j)
    assert parse_number("-pi") == -math.pi
    with pytest.raises(ValueError):
        parse_number("__import__('os')")


def test_parse_fig1a_file():
    seq = parse_sequence(FIG1A)
    assert len(seq.instructions) == 5
    assert isinstance(seq.instructions[2], Nonlinear) and seq.instructions[2].spec.echo == "x"
    assert seq.spans[0] == (2, 1)


@pytest.mark.parametrize(
    "text, message, line, column",
    [
        ("rot pair=01 axis=y theta=1", "sequence must begin with init", 1, 1),
        ("", "sequence must begin with init", 1, 1),
        ("init nmax=5\nfoo dur=1", "expected one of", 2, 1),
        ("init nmax=5\nwait dur=1 bogus=2", "unknown key 'bogus'", 2, 12),
        ("init nmax=5\nwait dur=1 dur=2", "duplicate key", 2, 12),
        ("init nmax=5\nwait", "missing required key 'dur'", 2, 1),
        ("init nmax=5\nrot pair=02 axis=y theta=1", "needs spin=3", 2, 1),
        ("init nmax=5\nnl k=2 zeta=1+ dur=0", "cannot evaluate", 2, 13),
        ("init nmax=5\nwait dur", "expected key=value", 2, 6),
        ("init nmax=5\ninit nmax=5", "only once", 2, 1),
        ("init nmax=5 spin=3 level=4", "outside spin dimension", 1, 1),
        ("init nmax=5\nmeasure herald=grey", "expected one of dark|bright", 2, 16),
    ],
)
def test_parse_errors(text, message, line, column):
    with pytest.raises(ParseError) as info:
        parse_sequence(text)
    assert message in info.value.message
    assert (info.value.line, info.value.column) == (line, column)


def test_parse_measure_options():
    seq = parse_sequence("init nmax=5\nmeasure herald=bright model=ideal dur=1e-4\n")
    m = seq.instructions[1]
    assert m.model.perfect and m.duration == 1e-4 and m.herald == "bright"


_real = st.floats(-3, 3, allow_nan=False).map(lambda v: round(v, 6))
_instr = st.one_of(
    st.builds(Rot, st.sampled_from([(0, 1), (0, 2), (1, 2)]), _real, _real),
    st.builds(
        Nonlinear,
        st.builds(
            NonlinearSpec,
            st.sampled_from([1, 2, 3, 4]),
            st.builds(complex, _real, _real),
            _real,
            st.sampled_from(["x", "y", "z"]),
        ),
        st.floats(0, 1e-3),
    ),
    st.builds(SdfDisplace, st.sampled_from(["x", "y", "z"]), st.builds(complex, _real, _real), st.floats(0, 1e-3)),
    st.builds(Wait, st.floats(0, 1e-3)),
    st.builds(Measure, st.sampled_from(["dark", "bright"]), st.sampled_from([None, DetectionModel.ideal(), DetectionModel()])),
)


@settings(max_examples=60, deadline=None)
@given(body=st.lists(_instr, max_size=6), nbar=st.floats(0, 1), level=st.integers(0, 2))
def test_property_format_round_trip(body, nbar, level):
    seq = Sequence((Init(20, nbar, 3, level),) + tuple(body))
    again = parse_sequence(format_sequence(seq))
    assert again.instructions == seq.instructions


def test_fig1a_herald_probability():
    r = execute(parse_sequence(FIG1A))
    assert r.herald_probability == pytest.approx(P_EVEN_112, abs=1e-6)
    assert r.measurements[0]["p_dark"] + r.measurements[0]["p_bright"] == pytest.approx(1.0, abs=1e-12)
    assert abs(np.real(np.trace(r.state.rho)) - 1) < 1e-12


def test_echo_axis_selects_parity():
    even = execute(parse_sequence(FIG1A))
    odd = execute(parse_sequence(FIG1A.replace("echo=x", "echo=y")))
    assert odd.herald_probability == pytest.approx(P_ODD_112, abs=1e-6)
    assert even.state.fock_populations()[0] > 0.5
    assert odd.state.fock_populations()[0] < 1e-20


def test_zero_squeezing_limits():
    r = execute(build_named_circuit("equal_superposition", {"k": 2, "zeta": 0.0, "n_max": 20}))
    assert r.herald_probability == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(HeraldImpossibleError):
        execute(build_named_circuit("equal_superposition", {"k": 2, "zeta": 0.0, "parity": "odd", "n_max": 20}))


def test_odd_state_lattice():
    r = execute(build_named_circuit("equal_superposition", {"k": 2, "zeta": 1.12, "parity": "odd", "n_max": 160}))
    pops = r.state.fock_populations()
    lattice = np.zeros(pops.size, dtype=bool)
    lattice[2::4] = True
    assert pops[~lattice].sum() < 1e-10
    psi = _superposition(1, 1.12, -1, -1.12, 160)
    assert _overlap(psi, r.state) > 1 - 1e-10


@settings(max_examples=15, deadline=None)
@given(mag=st.one_of(st.floats(0.1, 1.7), st.just(2.0)))
def test_property_closed_form_herald(mag):
    # the squeezed tail decays like tanh(r)^(2n); 600 levels hold |zeta|=2 under the guard
    n_max = 600 if mag > 1.7 else 400
    for parity, sign in (("even", 1), ("odd", -1)):
        r = execute(build_named_circuit("equal_superposition", {"k": 2, "zeta": mag, "parity": parity, "n_max": n_max}))
        closed = (2 + sign * 2 / math.sqrt(math.cosh(2 * mag))) / 4
        assert r.herald_probability == pytest.approx(closed, abs=1e-6)


def test_arbitrary_two_constituent_phase():
    zeta, phi = 1.12, math.pi / 4
    z2 = np.exp(2j * phi) * zeta
    r = execute(build_named_circuit("arbitrary_two_constituent", {"k": 2, "zeta": zeta, "zeta2": z2, "n_max": 160}))
    assert _overlap(_superposition(1, zeta, 1, z2, 160), r.state) >= 1 - 1e-9


def test_arbitrary_reproduces_equal_superposition():
    zeta = 1.12
    arb = execute(build_named_circuit("arbitrary_two_constituent", {"k": 2, "zeta": zeta, "zeta2": -zeta, "n_max": 160}))
    eq = execute(build_named_circuit("equal_superposition", {"k": 2, "zeta": zeta, "n_max": 160}))
    psi, _ = _osc_vector(eq.state)
    assert _overlap(psi, arb.state) >= 1 - 1e-9


def test_amplitude_ratio_control():
    zeta, n_max = 0.8, 120
    r = execute(build_named_circuit("equal_superposition", {"k": 2, "zeta": zeta, "theta": math.pi / 4, "n_max": n_max}))
    psi, _ = _osc_vector(r.state)
    basis = np.stack([generalized_squeezed_state(2, zeta, n_max), generalized_squeezed_state(2, -zeta, n_max)], axis=1)
    (a, b), *_ = np.linalg.lstsq(basis, psi, rcond=None)
    assert abs(a / b) == pytest.approx(math.sqrt(2) + 1, abs=1e-6)


def test_phase_control_swaps_parity():
    zeta, n_max = 1.12, 160
    r = execute(build_named_circuit("equal_superposition", {"k": 2, "zeta": zeta, "gamma": math.pi / 2, "n_max": n_max}))
    assert _overlap(_superposition(1, zeta, -1, -zeta, n_max), r.state) >= 1 - 1e-9


def test_squeezed_cat_matches_direct_construction():
    from hybridosc.fock import displacement

    n_max, zeta, alpha = 160, 1.25, 1.62
    r = execute(build_named_circuit("squeezed_cat", {"k": 2, "zeta": zeta, "alpha": alpha, "n_max": n_max}))
    even = _superposition(1, zeta, 1, -zeta, n_max)
    target = displacement(alpha, n_max) @ even + displacement(-alpha, n_max) @ even
    target /= np.linalg.norm(target)
    assert _overlap(target, r.state) >= 1 - 1e-6


def test_no_echo_variants():
    n_max = 160
    for parity, sign in (("even", 1), ("odd", -1)):
        r = execute(build_named_circuit("equal_superposition", {"k": 2, "zeta": 1.12, "parity": parity, "variant": "no_echo", "n_max": n_max}))
        assert _overlap(_superposition(1, 1.12, sign, -1.12, n_max), r.state) >= 1 - 1e-9
    # odd k: sigma_x conditioning, initial level picks the parity
    for parity, sign in (("even", 1), ("odd", -1)):
        r = execute(build_named_circuit("equal_superposition", {"k": 3, "zeta": 0.25, "parity": parity, "n_max": 160}), leak_tol=1e-3)
        assert _overlap(_superposition(1, 0.25, sign, -0.25, 160, k=3, leak_tol=1e-3), r.state) >= 1 - 1e-9
    with pytest.raises(DomainError):
        build_named_circuit("equal_superposition", {"k": 3, "zeta": 0.25, "theta": 1.0})
    with pytest.raises(DomainError):
        build_named_circuit("nonexistent", {})


def test_wrap_spin_echo_structure():
    parts = wrap_spin_echo(NonlinearSpec(2, 1.0), "y", 4e-4)
    assert [type(p) for p in parts] == [Nonlinear, Rot, Nonlinear]
    assert parts[0].spec.zeta == 0.5 and parts[2].spec.phi == pytest.approx(math.pi)
    assert parts[1].gamma == pytest.approx(math.pi / 2) and parts[0].duration == 2e-4
    with pytest.raises(DomainError):
        wrap_spin_echo(NonlinearSpec(2, 1.0, cond="x"), "y")
    # expanded and wrapped forms run identically
    seq = parse_sequence(FIG1A)
    flat = Sequence(tuple(expand(seq.instructions)))
    assert execute(flat).herald_probability == pytest.approx(execute(seq).herald_probability, abs=1e-12)


def test_zero_zeta_echo_flips_spin():
    seq = Sequence((Init(10), Nonlinear(NonlinearSpec(2, 0.0, echo="y")), Measure("dark", None, 0.0)))
    r = execute(seq)
    assert r.herald_probability == pytest.approx(1.0)
    assert r.state.fock_populations()[0] == pytest.approx(1.0)


def test_idle_baseline():
    seq = parse_sequence(FIG1A)
    base = idle_baseline(seq)
    assert not any(isinstance(i, (Nonlinear, SdfDisplace)) for i in base.instructions)
    assert sum(i.duration for i in base.instructions if isinstance(i, Wait)) == pytest.approx(400e-6)
    # rotations alone: R_y(pi/2) R_x(pi) R_y(pi/2) takes |0_s> to |1_s>
    assert execute(base).herald_probability == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(k=st.sampled_from([2, 3, 4]), mag=st.floats(0, 0.2), cond=st.sampled_from(["x", "y", "z"]))
def test_property_qutrit_hiding(k, mag, cond):
    hide = Sequence((Init(40, 0.0, 3, 0), Rot((0, 2), math.pi / 2, math.pi), Nonlinear(NonlinearSpec(k, mag, cond=cond))))
    ref = Sequence((Init(40, 0.0, 3, 0), Rot((0, 2), math.pi / 2, math.pi)))
    a = execute(hide, leak_tol=None).state.oscillator()
    b = execute(ref, leak_tol=None).state.oscillator()
    assert np.max(np.abs(a - b)) < 1e-12


def test_wait_matches_apply_heating():
    noise = NoiseSpec(0.0, 300.0, True)
    r = execute(Sequence((Init(30), Wait(5e-4)), noise))
    direct = apply_heating(HybridState.product(0, thermal_state(0, 30)), 300.0, 5e-4)
    assert np.max(np.abs(r.state.rho - direct.rho)) < 1e-12


def test_noisy_run_is_mixed_and_normalised():
    r = execute(build_named_circuit("equal_superposition", {"k": 2, "zeta": 0.5, "n_max": 60, "duration": 2e-4}, NoiseSpec.experimental()))
    assert r.state.purity() < 0.99
    assert abs(np.real(np.trace(r.state.rho)) - 1) < 1e-9
    assert np.linalg.eigvalsh(r.state.rho).min() > -1e-9
    assert r.elapsed == pytest.approx(4e-4)


def test_perfect_model_is_pure_projection():
    plain = execute(build_named_circuit("equal_superposition", {"k": 2, "zeta": 1.12, "n_max": 160}))
    ideal = execute(build_named_circuit("equal_superposition", {"k": 2, "zeta": 1.12, "n_max": 160, "model": DetectionModel.ideal()}))
    assert np.allclose(plain.state.rho, ideal.state.rho, atol=1e-14)


def test_detection_mixture_ratio():
    model = DetectionModel()
    params = {"k": 2, "zeta": 1.12, "parity": "odd", "n_max": 160, "model": model}
    r = execute(build_named_circuit("equal_superposition", params))
    pops = r.state.fock_populations()
    wrong = pops[0::4].sum()  # even-lattice weight leaked in by false dark counts
    ratio = (1 - wrong) / wrong
    p_db, p_bd, flip = detection_error_probs(model)
    expected = mixture_ratio(P_ODD_112, P_EVEN_112, model) * (1 - p_bd - flip)
    assert ratio == pytest.approx(expected, rel=1e-6)
    assert ratio > 1e3
    off = execute(build_named_circuit("equal_superposition", params), use_detection=False)
    assert off.state.fock_populations()[0::4].sum() < 1e-20


def test_determinism_and_sampling():
    seq = build_named_circuit("equal_superposition", {"k": 2, "zeta": 1.12, "n_max": 100})
    a, b = execute(seq), execute(seq)
    assert np.array_equal(a.state.rho, b.state.rho) and a.herald_probability == b.herald_probability
    assert sample_heralds(a, 500, 7) == sample_heralds(b, 500, 7)
    counts = [sample_heralds(a, 1000, s)[0] for s in range(200)]
    assert np.mean(counts) / 1000 == pytest.approx(P_EVEN_112, abs=5e-3)
    assert make_rng(3).random() == make_rng(3).random()


def test_run_result_json():
    r = execute(parse_sequence(FIG1A))
    d = r.to_dict()
    assert set(d) >= {"herald_probability", "spin_probs", "fock_populations", "purity", "options"}
    assert d["purity"] == pytest.approx(1.0)
    assert r.to_json()


def test_noise_override_and_sequence_noise():
    seq = Sequence((Init(20), Wait(1e-3)), NoiseSpec(0.0, 300.0, True))
    assert execute(seq).state.mean_phonon() == pytest.approx(0.3, abs=1e-3)
    assert execute(seq, noise=NOISELESS).state.mean_phonon() == 0.0

"""Pulse-sequence representation, text DSL and executor.

A sequence file is line oriented; ``#`` starts a comment::

    init nbar=0 nmax=400 spin=2 level=0
    rot pair=01 axis=y theta=pi/2
    nl k=2 zeta=1.12i phi=0 cond=z echo=x dur=400e-6
    rot pair=01 axis=y theta=pi/2
    measure herald=dark

The spin readout reports ``|1_s>`` as dark; ``|0_s>`` and ``|2_s>`` fluoresce.
"""

import ast
from dataclasses import dataclass, field, replace
import cmath
import json
import math
import re

import numpy as np

from .detection import DetectionModel, detection_error_probs
from .errors import DomainError, HeraldImpossibleError, ParseError
from .evolution import (
    NOISELESS,
    NoiseSpec,
    NonlinearSpec,
    apply_unitary_raw,
    branch_unitary,
    default_steps,
    heating_raw,
    rotation_matrix,
    spin_branches,
    _spin_apply,
)
from .fock import (
    DEFAULT_LEAK_TOL,
    HybridState,
    check_leakage,
    displacement,
    generalized_squeeze,
    thermal_populations,
)

DARK_LEVEL = 1
HERALD_FLOOR = 1e-15
DEFAULT_READOUT = 200e-6


# -- instructions -----------------------------------------------------------


@dataclass(frozen=True)
class Init:
    n_max: int
    nbar: float = 0.0
    spin_dim: int = 2
    level: int = 0

    def __post_init__(self):
        if self.spin_dim not in (2, 3):
            raise DomainError("spin must be 2 or 3")
        if not 0 <= self.level < self.spin_dim:
            raise DomainError(f"level {self.level} outside spin dimension {self.spin_dim}")
        if self.n_max < 1:
            raise DomainError("nmax must be >= 1")
        if self.nbar < 0:
            raise DomainError("nbar must be >= 0")


@dataclass(frozen=True)
class Rot:
    pair: tuple
    gamma: float
    theta: float


@dataclass(frozen=True)
class Nonlinear:
    spec: NonlinearSpec
    duration: float = 0.0

    def __post_init__(self):
        if self.duration < 0:
            raise DomainError("durations must be >= 0")


@dataclass(frozen=True)
class SdfDisplace:
    """Spin-dependent displacement ``D(sigma_axis alpha)``."""

    axis: str
    alpha: complex
    duration: float = 0.0

    def __post_init__(self):
        if self.duration < 0:
            raise DomainError("durations must be >= 0")


@dataclass(frozen=True)
class Wait:
    duration: float

    def __post_init__(self):
        if self.duration < 0:
            raise DomainError("durations must be >= 0")


@dataclass(frozen=True)
class Measure:
    """Mid-circuit spin readout heralding on ``herald``.

    ``duration`` is the readout window, during which the oscillator heats.
    """

    herald: str = "dark"
    model: DetectionModel = None
    duration: float = DEFAULT_READOUT

    def __post_init__(self):
        if self.herald not in ("dark", "bright"):
            raise DomainError("herald must be dark or bright")
        if self.duration < 0:
            raise DomainError("durations must be >= 0")


@dataclass(frozen=True)
class Sequence:
    instructions: tuple
    noise: NoiseSpec = NOISELESS
    spans: tuple = ()

    def __post_init__(self):
        if not self.instructions or not isinstance(self.instructions[0], Init):
            raise DomainError("sequence must begin with init")
        if any(isinstance(i, Init) for i in self.instructions[1:]):
            raise DomainError("init may appear only once")

    @property
    def init(self):
        return self.instructions[0]

    def with_noise(self, noise):
        return replace(self, noise=noise)

    def with_n_max(self, n_max):
        return replace(self, instructions=(replace(self.init, n_max=n_max),) + self.instructions[1:])


def wrap_spin_echo(spec, echo_axis, duration=0.0):
    """Split a sigma_z-conditioned interaction around a refocusing pi pulse.

    The second arm runs with the oscillator phase advanced by pi so that,
    after the spin flip, both arms push each branch the same way.
    """
    if spec.cond != "z":
        raise DomainError("spin echo requires sigma_z conditioning")
    half = NonlinearSpec(spec.k, spec.zeta / 2, spec.phi, "z", None)
    second = replace(half, phi=spec.phi + math.pi)
    gamma = {"x": 0.0, "y": math.pi / 2}.get(echo_axis, echo_axis)
    return [
        Nonlinear(half, duration / 2),
        Rot((0, 1), float(gamma), math.pi),
        Nonlinear(second, duration / 2),
    ]


def expand(instructions):
    """Replace echo-wrapped interactions by their three primitive steps."""
    out = []
    for ins in instructions:
        if isinstance(ins, Nonlinear) and ins.spec.echo is not None:
            out.extend(wrap_spin_echo(ins.spec, ins.spec.echo, ins.duration))
        else:
            out.append(ins)
    return out


def idle_baseline(seq):
    """Same timing with every bosonic interaction replaced by an idle wait."""
    out = []
    for ins in expand(seq.instructions):
        if isinstance(ins, (Nonlinear, SdfDisplace)):
            out.append(Wait(ins.duration))
        else:
            out.append(ins)
    return replace(seq, instructions=tuple(out), spans=())


# -- value parsing ----------------------------------------------------------

_IMAG_LITERAL = re.compile(r"(?<![\w.])((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)i\b")
_FUNCS = {"sqrt": cmath.sqrt, "exp": cmath.exp, "cos": cmath.cos, "sin": cmath.sin}
_NAMES = {"pi": math.pi, "i": 1j}
_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.Pow: lambda a, b: a**b,
}


def _eval_node(node):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)):
        return node.value
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
        v = _eval_node(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_node(node.left), _eval_node(node.right))
    if (
        isinstance(node, ast.Call)
        and isinstance(node.func, ast.Name)
        and node.func.id in _FUNCS
        and len(node.args) == 1
        and not node.keywords
    ):
        return _FUNCS[node.func.id](_eval_node(node.args[0]))
    raise ValueError("unsupported expression")


def parse_number(text):
    """Evaluate a numeric token: ``pi`` expressions and complex ``a+bi``."""
    src = _IMAG_LITERAL.sub(r"\1j", text.strip())
    try:
        val = _eval_node(ast.parse(src, mode="eval"))
    except (SyntaxError, ValueError, ZeroDivisionError, OverflowError, TypeError) as exc:
        raise ValueError(f"cannot evaluate {text!r}") from exc
    val = complex(val)
    if not (math.isfinite(val.real) and math.isfinite(val.imag)):
        raise ValueError(f"{text!r} is not finite")
    return val


def parse_real(text):
    val = parse_number(text)
    if abs(val.imag) > 1e-12 * max(1.0, abs(val.real)):
        raise ValueError(f"expected a real number, got {text!r}")
    return val.real


def parse_int(text):
    val = parse_real(text)
    if val != int(val):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(val)


def parse_axis(text, allowed=("x", "y")):
    """Axis label, or an angle in radians for a rotation axis in the xy-plane."""
    if text in allowed:
        return text
    if text in ("x", "y", "z"):
        raise ValueError(f"axis {text!r} not allowed here")
    return parse_real(text)


def _axis_angle(axis):
    return {"x": 0.0, "y": math.pi / 2}[axis] if isinstance(axis, str) else axis


def _parse_pair(text):
    if not re.fullmatch(r"[0-2]{2}", text) or text[0] == text[1]:
        raise ValueError(f"expected two distinct levels such as 01 or 02, got {text!r}")
    return (int(text[0]), int(text[1]))


def _parse_model(text):
    models = {"default": DetectionModel(), "ideal": DetectionModel.ideal()}
    if text not in models:
        raise ValueError(f"unknown detection model {text!r}; expected one of {sorted(models)}")
    return models[text]


def _parse_choice(*choices):
    def parse(text):
        if text not in choices:
            raise ValueError(f"expected one of {'|'.join(choices)}, got {text!r}")
        return text

    return parse


# keyword -> (parser, required)
_GRAMMAR = {
    "init": {"nbar": (parse_real, False), "nmax": (parse_int, True), "spin": (parse_int, False), "level": (parse_int, False)},
    "rot": {"pair": (_parse_pair, True), "axis": (parse_axis, True), "theta": (parse_real, True)},
    "nl": {
        "k": (parse_int, True),
        "zeta": (parse_number, True),
        "phi": (parse_real, False),
        "cond": (_parse_choice("x", "y", "z"), False),
        "echo": (parse_axis, False),
        "dur": (parse_real, False),
    },
    "sdf": {"axis": (_parse_choice("x", "y", "z"), True), "alpha": (parse_number, True), "dur": (parse_real, False)},
    "wait": {"dur": (parse_real, True)},
    "measure": {"herald": (_parse_choice("dark", "bright"), True), "model": (_parse_model, False), "dur": (parse_real, False)},
}


def _build(cmd, v):
    if cmd == "init":
        return Init(v["nmax"], v.get("nbar", 0.0), v.get("spin", 2), v.get("level", 0))
    if cmd == "rot":
        return Rot(v["pair"], _axis_angle(v["axis"]), v["theta"])
    if cmd == "nl":
        spec = NonlinearSpec(v["k"], v["zeta"], v.get("phi", 0.0), v.get("cond", "z"), v.get("echo"))
        return Nonlinear(spec, v.get("dur", 0.0))
    if cmd == "sdf":
        return SdfDisplace(v["axis"], v["alpha"], v.get("dur", 0.0))
    if cmd == "wait":
        return Wait(v["dur"])
    return Measure(v["herald"], v.get("model"), v.get("dur", DEFAULT_READOUT))


def tokenize(line):
    """Yield ``(column, token)`` for whitespace-separated tokens (1-based columns)."""
    for m in re.finditer(r"\S+", line):
        yield m.start() + 1, m.group()


def parse_sequence(text, noise=NOISELESS):
    """Parse DSL text into a :class:`Sequence`; errors carry line and column."""
    instructions, spans = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        toks = list(tokenize(line))
        if not toks:
            continue
        col, cmd = toks[0]
        if cmd not in _GRAMMAR:
            raise ParseError(f"expected one of {', '.join(_GRAMMAR)}, got {cmd!r}", lineno, col)
        if not instructions and cmd != "init":
            raise ParseError("sequence must begin with init", lineno, col)
        if instructions and cmd == "init":
            raise ParseError("init may appear only once", lineno, col)
        rules = _GRAMMAR[cmd]
        values = {}
        for tcol, tok in toks[1:]:
            key, eq, val = tok.partition("=")
            if not eq or not val:
                raise ParseError(f"expected key=value, got {tok!r}", lineno, tcol)
            if key not in rules:
                raise ParseError(f"unknown key {key!r} for {cmd}; expected one of {', '.join(rules)}", lineno, tcol)
            if key in values:
                raise ParseError(f"duplicate key {key!r}", lineno, tcol)
            try:
                values[key] = rules[key][0](val)
            except ValueError as exc:
                raise ParseError(str(exc), lineno, tcol + len(key) + 1) from None
        missing = [k for k, (_, req) in rules.items() if req and k not in values]
        if missing:
            raise ParseError(f"{cmd} is missing required key {missing[0]!r}", lineno, col)
        try:
            ins = _build(cmd, values)
        except DomainError as exc:
            raise ParseError(str(exc), lineno, col) from None
        instructions.append(ins)
        spans.append((lineno, col))
    if not instructions:
        raise ParseError("sequence must begin with init", 1, 1)
    seq = Sequence(tuple(instructions), noise, tuple(spans))
    spin_dim = seq.init.spin_dim
    for ins, (lineno, col) in zip(seq.instructions, seq.spans):
        if isinstance(ins, Rot) and max(ins.pair) >= spin_dim:
            raise ParseError(f"pair {ins.pair} needs spin=3", lineno, col)
    return seq


def _fmt(x):
    x = complex(x)
    if x.imag == 0:
        return repr(x.real)
    return f"{x.real!r}{x.imag:+.17g}i"


def format_sequence(seq):
    """Render a sequence back to DSL text (round-trips through :func:`parse_sequence`)."""
    lines = []
    for ins in seq.instructions:
        if isinstance(ins, Init):
            lines.append(f"init nbar={ins.nbar!r} nmax={ins.n_max} spin={ins.spin_dim} level={ins.level}")
        elif isinstance(ins, Rot):
            lines.append(f"rot pair={ins.pair[0]}{ins.pair[1]} axis={ins.gamma!r} theta={ins.theta!r}")
        elif isinstance(ins, Nonlinear):
            s = ins.spec
            echo = "" if s.echo is None else f" echo={s.echo}"
            lines.append(f"nl k={s.k} zeta={_fmt(s.zeta)} phi={s.phi!r} cond={s.cond}{echo} dur={ins.duration!r}")
        elif isinstance(ins, SdfDisplace):
            lines.append(f"sdf axis={ins.axis} alpha={_fmt(ins.alpha)} dur={ins.duration!r}")
        elif isinstance(ins, Wait):
            lines.append(f"wait dur={ins.duration!r}")
        elif isinstance(ins, Measure):
            model = ""
            if ins.model is not None:
                model = " model=ideal" if ins.model.perfect else " model=default"
            lines.append(f"measure herald={ins.herald}{model} dur={ins.duration!r}")
    return "\n".join(lines) + "\n"


# -- execution --------------------------------------------------------------


@dataclass
class RunResult:
    state: HybridState
    herald_probability: float
    measurements: list
    elapsed: float
    options: dict = field(default_factory=dict)

    def oscillator(self):
        return self.state.oscillator()

    def to_dict(self):
        spin_probs = self.measurements[-1]["spin_probs"] if self.measurements else list(self.state.spin_populations())
        osc = self.oscillator()
        return {
            "herald_probability": self.herald_probability,
            "spin_probs": [float(p) for p in spin_probs],
            "fock_populations": [float(p) for p in np.real(np.diag(osc))],
            "purity": float(np.real(np.vdot(osc, osc))),
            "measurements": self.measurements,
            "elapsed": self.elapsed,
            "options": self.options,
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


class _Runner:
    """Carries either a state vector (pure path) or a density matrix."""

    def __init__(self, init, noise, leak_tol, force_rho):
        self.sd, self.n_max = init.spin_dim, init.n_max
        self.noise = noise
        self.leak_tol = leak_tol
        self.heating = noise.enabled and noise.ndot > 0
        nbar = init.nbar if init.nbar > 0 else (noise.nbar0 if noise.enabled else 0.0)
        dim = self.sd * (self.n_max + 1)
        spin = np.zeros(self.sd)
        spin[init.level] = 1.0
        if nbar == 0 and not self.heating and not force_rho:
            self.x = np.zeros(dim, dtype=complex)
            self.x[init.level * (self.n_max + 1)] = 1.0
        else:
            self.x = np.diag(np.kron(spin, thermal_populations(nbar, self.n_max))).astype(complex)

    @property
    def pure(self):
        return self.x.ndim == 1

    def to_rho(self):
        if self.pure:
            self.x = np.outer(self.x, self.x.conj())

    def fock_populations(self):
        n = self.n_max + 1
        if self.pure:
            return (np.abs(self.x.reshape(self.sd, n)) ** 2).sum(axis=0)
        return np.real(np.einsum("iaia->a", self.x.reshape(self.sd, n, self.sd, n)))

    def spin_populations(self):
        n = self.n_max + 1
        if self.pure:
            return (np.abs(self.x.reshape(self.sd, n)) ** 2).sum(axis=1)
        return np.real(np.einsum("iaia->i", self.x.reshape(self.sd, n, self.sd, n)))

    def heat(self, t, steps=None):
        if self.heating and t > 0:
            self.to_rho()
            self.x = heating_raw(self.x, self.sd, self.noise.ndot, t, steps)

    def branch_evolution(self, basis, ops_full, ops_step, duration):
        """Apply conditioned ops, Strang-split against heating when noisy."""
        if not self.heating or duration == 0:
            self.x = apply_unitary_raw(self.x, branch_unitary(self.sd, basis, ops_full))
            return
        n = default_steps(duration)
        dt = duration / n
        step = branch_unitary(self.sd, basis, ops_step(n))
        self.heat(dt / 2, steps=1)
        for i in range(n):
            self.x = apply_unitary_raw(self.x, step)
            self.heat(dt if i < n - 1 else dt / 2, steps=1 if i == n - 1 else 2)

    def nonlinear(self, spec, duration):
        basis, signs = spin_branches(spec.cond, self.sd)
        z = spec.complex_zeta

        def ops(scale):
            return [None if s == 0 else generalized_squeeze(spec.k, s * z * scale, self.n_max, None) for s in signs]

        # leakage is checked on the state after the instruction, see execute
        self.branch_evolution(basis, ops(1.0), lambda n: ops(1.0 / n), duration)

    def displace(self, axis, alpha, duration):
        basis, signs = spin_branches(axis, self.sd)

        def ops(scale, tol):
            return [None if s == 0 else displacement(s * alpha * scale, self.n_max, leak_tol=tol) for s in signs]

        self.branch_evolution(basis, ops(1.0, None), lambda n: ops(1.0 / n, None), duration)

    def rotate(self, ins):
        self.x = _spin_apply(self.x, self.sd, rotation_matrix(self.sd, ins.pair, ins.gamma, ins.theta))

    def measure(self, ins, use_detection):
        pops = self.spin_populations()
        total = pops.sum()
        p_dark = float(pops[DARK_LEVEL] / total)
        p_bright = 1.0 - p_dark
        model = ins.model if use_detection else None
        if model is None or model.perfect:
            w_dark, w_bright = (1.0, 0.0) if ins.herald == "dark" else (0.0, 1.0)
        else:
            p_db, p_bd, flip = detection_error_probs(model)
            if ins.herald == "dark":
                w_dark, w_bright = 1.0 - p_bd - flip, p_db
            else:
                w_dark, w_bright = p_bd + flip, 1.0 - p_db
        p_obs = w_dark * p_dark + w_bright * p_bright
        if p_obs < HERALD_FLOOR:
            raise HeraldImpossibleError(f"{ins.herald} herald has probability {p_obs:.3e}")
        dark = np.zeros(self.sd)
        dark[DARK_LEVEL] = 1.0
        proj_d = np.kron(dark, np.ones(self.n_max + 1))
        proj_b = 1.0 - proj_d
        if w_bright == 0 or w_dark == 0:
            keep = proj_d if w_dark else proj_b
            if self.pure:
                self.x = keep * self.x / math.sqrt(p_obs * total)
            else:
                self.x = keep[:, None] * self.x * keep[None, :] / (p_obs * total)
        else:
            self.to_rho()
            rd = proj_d[:, None] * self.x * proj_d[None, :]
            rb = proj_b[:, None] * self.x * proj_b[None, :]
            self.x = (w_dark * rd + w_bright * rb) / (p_obs * total)
        spin_probs = [float(p / total) for p in pops]
        return {"herald": ins.herald, "p_dark": p_dark, "p_bright": p_bright, "p_herald": p_obs, "spin_probs": spin_probs}

    def state(self):
        x = self.x
        if self.pure:
            x = x / np.linalg.norm(x)
            return HybridState.from_vector(x, self.sd, self.n_max)
        x = 0.5 * (x + x.conj().T)
        return HybridState(self.sd, self.n_max, x / np.real(np.trace(x)))


def execute(seq, noise=None, use_detection=True, leak_tol=DEFAULT_LEAK_TOL, force_rho=False):
    """Run ``seq`` and return the heralded state and its probability.

    ``noise`` overrides ``seq.noise``. Noiseless runs from the ground state
    use a state-vector fast path; anything else evolves the density matrix.
    With ``use_detection`` a measurement carrying a :class:`DetectionModel`
    heralds the readout-error mixture instead of the pure projection.
    """
    noise = seq.noise if noise is None else noise
    runner = _Runner(seq.init, noise, leak_tol, force_rho)
    measurements = []
    herald_p = 1.0
    elapsed = 0.0
    for ins in expand(seq.instructions[1:]):
        if isinstance(ins, Rot):
            runner.rotate(ins)
        elif isinstance(ins, Nonlinear):
            runner.nonlinear(ins.spec, ins.duration)
            elapsed += ins.duration
        elif isinstance(ins, SdfDisplace):
            runner.displace(ins.axis, ins.alpha, ins.duration)
            elapsed += ins.duration
        elif isinstance(ins, Wait):
            runner.heat(ins.duration)
            elapsed += ins.duration
        elif isinstance(ins, Measure):
            rec = runner.measure(ins, use_detection)
            measurements.append(rec)
            herald_p *= rec["p_herald"]
            runner.heat(ins.duration)
            elapsed += ins.duration
        if not isinstance(ins, Rot):
            check_leakage(runner.fock_populations(), leak_tol, type(ins).__name__)
    options = {
        "noise": {"enabled": noise.enabled, "nbar0": noise.nbar0, "ndot": noise.ndot},
        "use_detection": use_detection,
        "n_max": seq.init.n_max,
        "leak_tol": leak_tol,
    }
    return RunResult(runner.state(), float(herald_p), measurements, elapsed, options)


def make_rng(seed):
    """Counter-based generator; ``seed`` may be an int or a ``SeedSequence``."""
    return np.random.Generator(np.random.Philox(seed))


def sample_heralds(result, shots, seed):
    """Monte-Carlo herald counts: surviving shots after each measurement."""
    if shots <= 0:
        raise DomainError("shots must be positive")
    rng = make_rng(seed)
    alive = shots
    counts = []
    for rec in result.measurements:
        alive = int(rng.binomial(alive, rec["p_herald"]))
        counts.append(alive)
    return counts


# -- named circuits ---------------------------------------------------------


def _cplx_zeta(params, key="zeta"):
    if key in params:
        return complex(params[key])
    abs_key = key + "_abs"
    if abs_key in params:
        return params[abs_key] * cmath.exp(1j * params.get(key + "_phi", 0.0))
    raise DomainError(f"missing parameter {key!r}")


def _equal_superposition(p):
    k = int(p.get("k", 2))
    zeta = _cplx_zeta(p)
    parity = p.get("parity", "even")
    if parity not in ("even", "odd"):
        raise DomainError("parity must be even or odd")
    variant = p.get("variant", "echo" if k % 2 == 0 else "no_echo")
    n_max = int(p.get("n_max", 120))
    dur = float(p.get("duration", 0.0))
    readout = float(p.get("readout", DEFAULT_READOUT))
    theta = float(p.get("theta", math.pi / 2))
    # relative phase e^{-2i gamma} between the constituents; odd adds pi/2
    gamma = float(p.get("gamma", 0.0)) + (0.0 if parity == "even" else math.pi / 2)
    if variant == "echo":
        ins = [
            Init(n_max, float(p.get("nbar", 0.0))),
            Rot((0, 1), math.pi / 2, theta),
            Nonlinear(NonlinearSpec(k, zeta, cond="z", echo=gamma), dur),
            Rot((0, 1), math.pi / 2, math.pi / 2),
        ]
    elif variant == "no_echo" and k % 2 == 0:
        ins = [
            Init(n_max, float(p.get("nbar", 0.0))),
            Rot((0, 1), math.pi / 2, theta),
            Nonlinear(NonlinearSpec(k, zeta, cond="z"), dur),
            Rot((0, 1), math.pi / 2 + 2 * gamma, math.pi / 2),
        ]
    elif variant == "no_echo":
        # sigma_x conditioning without rotations; the initial level picks the parity
        if "gamma" in p or "theta" in p:
            raise DomainError("theta/gamma control needs the echo variant")
        level = 1 if parity == "even" else 0
        ins = [Init(n_max, float(p.get("nbar", 0.0)), 2, level), Nonlinear(NonlinearSpec(k, zeta, cond="x"), dur)]
    else:
        raise DomainError(f"unknown variant {variant!r}")
    ins.append(Measure("dark", p.get("model"), readout))
    return ins


def _arbitrary(p):
    k = int(p.get("k", 2))
    k2 = int(p.get("k2", k))
    zeta = _cplx_zeta(p)
    zeta2 = _cplx_zeta(p, "zeta2")
    theta = float(p.get("theta", math.pi / 2))
    gamma = float(p.get("gamma", math.pi / 2))
    n_max = int(p.get("n_max", 120))
    dur1 = float(p.get("duration", 0.0))
    dur2 = float(p.get("duration2", dur1))
    return [
        Init(n_max, float(p.get("nbar", 0.0)), 3, 0),
        Rot((0, 2), math.pi / 2, theta),
        Nonlinear(NonlinearSpec(k, zeta, cond="z"), dur1),
        Rot((0, 2), gamma, math.pi),
        Nonlinear(NonlinearSpec(k2, zeta2, cond="z"), dur2),
        Rot((0, 2), math.pi / 2, math.pi / 2),
        Rot((0, 1), math.pi / 2, math.pi),
        Measure("dark", p.get("model"), float(p.get("readout", DEFAULT_READOUT))),
    ]


def _squeezed_cat(p):
    ins = _equal_superposition({**p, "parity": p.get("parity", "even")})
    alpha = complex(p.get("alpha", 1.62))
    ins.append(SdfDisplace(p.get("axis", "x"), alpha, float(p.get("sdf_duration", 0.0))))
    ins.append(Measure("dark", p.get("model"), float(p.get("readout", DEFAULT_READOUT))))
    return ins


_NAMED = {
    "equal_superposition": _equal_superposition,
    "arbitrary_two_constituent": _arbitrary,
    "squeezed_cat": _squeezed_cat,
}


def build_named_circuit(name, params=None, noise=NOISELESS):
    """Build one of the library's standard circuits.

    ``equal_superposition``
        ``k, zeta, parity`` plus optional ``theta`` (amplitude ratio
        ``cot(theta/2)``), ``gamma`` (relative phase ``e^{-2i gamma}``) and
        ``variant`` ('echo' or 'no_echo').
    ``arbitrary_two_constituent``
        Qutrit circuit for ``|zeta_k> + |zeta2_k2>``; ``theta`` and ``gamma``
        set the amplitude ratio and relative phase.
    ``squeezed_cat``
        Equal superposition, herald, spin-dependent displacement by
        ``alpha``, herald again.
    """
    if name not in _NAMED:
        raise DomainError(f"unknown circuit {name!r}; expected one of {sorted(_NAMED)}")
    return Sequence(tuple(_NAMED[name](dict(params or {}))), noise)

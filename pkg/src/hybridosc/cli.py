"""Command-line front end: ``hybridosc run|sweep|wigner|table``.

Every command writes data files only (CSV/JSON). Errors are reported as a
single JSON object on stderr; exit code 2 marks configuration problems and
1 any failure during the computation.
"""

import argparse
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
import cmath
import csv
import io
import json
import math
from importlib import resources
from pathlib import Path
import sys

import numpy as np

from . import analysis
from .detection import DetectionModel
from .errors import ConfigError, HeraldImpossibleError, HybridOscError, ParseError
from .evolution import NOISELESS, NoiseSpec
from .sequence import (
    build_named_circuit,
    execute,
    idle_baseline,
    parse_number,
    parse_real,
    parse_sequence,
    sample_heralds,
)
from .tomography import char_grid_exact, char_grid_measured, reconstruct_wigner

SWEEP_PARAMS = ("zeta_abs", "duration", "gamma", "phi", "c")


@dataclass(frozen=True)
class ExperimentConfig:
    circuit: str = "equal_superposition"
    sequence: str = None
    k: int = 2
    zeta: complex = 1.12
    parity: str = "even"
    variant: str = None
    k2: int = None
    zeta2: complex = None
    theta: float = None
    gamma: float = None
    phi: float = None
    c: float = None
    alpha: complex = 1.62
    axis: str = "x"
    duration: float = 0.0
    duration2: float = None
    sdf_duration: float = 0.0
    readout: float = 200e-6
    noise: bool = False
    nbar0: float = 0.1
    ndot: float = 300.0
    detection: bool = False
    n_max: int = 160
    leak_tol: float = 1e-8
    beta_max: float = 6.0
    grid_n: int = 201
    mass_fraction: float = 0.95
    chi_radius: float = 1.0
    shots: int = None
    seed: int = 0
    out: str = "."
    format: str = "csv"
    name: str = None

    def validate(self):
        if self.sequence is None and self.circuit not in ("equal_superposition", "arbitrary_two_constituent", "squeezed_cat"):
            raise ConfigError(f"unknown circuit {self.circuit!r}", key="circuit")
        if self.parity not in ("even", "odd"):
            raise ConfigError("parity must be even or odd", key="parity")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json", key="format")
        if self.n_max < 2:
            raise ConfigError("n_max must be >= 2", key="n_max")
        if self.grid_n % 2 == 0 or self.grid_n < 3:
            raise ConfigError("grid_n must be odd and >= 3", key="grid_n")
        if self.shots is not None and self.shots <= 0:
            raise ConfigError("shots must be positive", key="shots")
        if sum(v is not None for v in (self.zeta2, self.phi, self.c)) > 1:
            raise ConfigError("give at most one of zeta2, phi, c", key="zeta2")
        if not 0 < self.mass_fraction <= 1:
            raise ConfigError("mass_fraction must lie in (0, 1]", key="mass_fraction")
        return self

    @property
    def noise_spec(self):
        if not self.noise:
            return NOISELESS
        return NoiseSpec(self.nbar0, self.ndot, True)

    def second_zeta(self):
        if self.zeta2 is not None:
            return complex(self.zeta2)
        if self.c is not None:
            return self.c * complex(self.zeta)
        if self.phi is not None:
            return cmath.exp(2j * self.phi) * complex(self.zeta)
        return None

    def to_dict(self):
        d = asdict(self)
        for key, val in d.items():
            if isinstance(val, complex):
                d[key] = {"re": val.real, "im": val.imag}
        return d


def _parse_bool(text):
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_int(text):
    val = parse_real(text)
    if val != int(val):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(val)


def _parse_tol(text):
    return None if text.lower() in ("off", "none") else parse_real(text)


_PARSERS = {
    "circuit": str,
    "sequence": str,
    "k": _parse_int,
    "zeta": parse_number,
    "parity": str,
    "variant": str,
    "k2": _parse_int,
    "zeta2": parse_number,
    "theta": parse_real,
    "gamma": parse_real,
    "phi": parse_real,
    "c": parse_real,
    "alpha": parse_number,
    "axis": str,
    "duration": parse_real,
    "duration2": parse_real,
    "sdf_duration": parse_real,
    "readout": parse_real,
    "noise": _parse_bool,
    "nbar0": parse_real,
    "ndot": parse_real,
    "detection": _parse_bool,
    "n_max": _parse_int,
    "leak_tol": _parse_tol,
    "beta_max": parse_real,
    "grid_n": _parse_int,
    "mass_fraction": parse_real,
    "chi_radius": parse_real,
    "shots": _parse_int,
    "seed": _parse_int,
    "out": str,
    "format": str,
    "name": str,
}
assert set(_PARSERS) == {f.name for f in fields(ExperimentConfig)}


def parse_config_text(text, base=None):
    """Parse ``key = value`` lines on top of ``base`` (default config)."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not eq or not key or not val:
            raise ConfigError(f"line {lineno}: expected key = value")
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}", key=key)
        try:
            values[key] = _PARSERS[key](val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {exc}", key=key) from None
    return replace(base or ExperimentConfig(), **values)


def _preset_dir():
    return resources.files("hybridosc").joinpath("presets")


def preset_names():
    """Shipped presets: ``.cfg`` configs and ``.seq`` pulse sequences."""
    return sorted(p.name[:-4] for p in _preset_dir().iterdir() if p.name.endswith((".cfg", ".seq")))


def load_preset(name):
    cfg_path = _preset_dir().joinpath(f"{name}.cfg")
    if cfg_path.is_file():
        return parse_config_text(cfg_path.read_text(), ExperimentConfig(name=name))
    seq_path = _preset_dir().joinpath(f"{name}.seq")
    if seq_path.is_file():
        seq = parse_sequence(seq_path.read_text())
        return ExperimentConfig(name=name, sequence=str(seq_path), n_max=seq.init.n_max)
    raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}", key="preset")


# -- building and running ---------------------------------------------------


def circuit_params(cfg, parity=None):
    p = {
        "k": cfg.k,
        "zeta": complex(cfg.zeta),
        "parity": parity or cfg.parity,
        "n_max": cfg.n_max,
        "duration": cfg.duration,
        "readout": cfg.readout,
    }
    if cfg.detection:
        p["model"] = DetectionModel()
    for key in ("variant", "theta", "gamma", "duration2", "k2"):
        val = getattr(cfg, key)
        if val is not None:
            p[key] = val
    if cfg.circuit == "arbitrary_two_constituent":
        z2 = cfg.second_zeta()
        p["zeta2"] = -complex(cfg.zeta) if z2 is None else z2
        if parity == "odd" or (parity is None and cfg.parity == "odd"):
            p["gamma"] = p.get("gamma", math.pi / 2) + math.pi / 2
        p.pop("parity")
    if cfg.circuit == "squeezed_cat":
        p.update(alpha=complex(cfg.alpha), axis=cfg.axis, sdf_duration=cfg.sdf_duration)
    return p


def build_sequence(cfg, parity=None):
    if cfg.sequence is not None:
        seq = parse_sequence(Path(cfg.sequence).read_text(), cfg.noise_spec)
        return seq.with_n_max(cfg.n_max) if cfg.n_max != seq.init.n_max else seq
    return build_named_circuit(cfg.circuit, circuit_params(cfg, parity), cfg.noise_spec)


def run_config(cfg, parity=None):
    return execute(build_sequence(cfg, parity), leak_tol=cfg.leak_tol)


def _write(out, name, text):
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    return path


def _config_comment(cfg):
    return "# config=" + json.dumps(cfg.to_dict(), sort_keys=True) + "\n"


def tomography(cfg, state):
    if cfg.shots is None:
        char = char_grid_exact(state, cfg.beta_max, cfg.grid_n)
        stderr = None
    else:
        model = DetectionModel() if cfg.detection else None
        char, stderr = char_grid_measured(state, cfg.beta_max, cfg.grid_n, cfg.shots, cfg.seed, model)
    return char, stderr, reconstruct_wigner(char)


def cmd_run(cfg):
    result = run_config(cfg)
    _, _, wg = tomography(replace(cfg, shots=None), result.state)
    metrics = analysis.metrics_from_wigner(wg, result.state, result.herald_probability, cfg.mass_fraction)
    payload = result.to_dict()
    payload["config"] = cfg.to_dict()
    if cfg.shots is not None:
        payload["sampled_heralds"] = sample_heralds(result, cfg.shots, cfg.seed)
    out = Path(cfg.out)
    _write(out, "run.json", json.dumps(payload, indent=2))
    _write(out, "metrics.json", json.dumps({"config": cfg.to_dict(), **metrics.to_dict()}, indent=2))
    return payload, metrics


def cmd_wigner(cfg):
    result = run_config(cfg)
    char, stderr, wg = tomography(cfg, result.state)
    metrics = analysis.metrics_from_wigner(wg, result.state, result.herald_probability, cfg.mass_fraction)
    out = Path(cfg.out)
    if cfg.format == "csv":
        _write(out, "char.csv", _config_comment(cfg) + char.to_csv())
        _write(out, "wigner.csv", _config_comment(cfg) + wg.to_csv())
    else:
        _write(out, "char.json", json.dumps({"config": cfg.to_dict(), **char.to_dict()}))
        _write(out, "wigner.json", json.dumps({"config": cfg.to_dict(), **wg.to_dict()}))
    _write(out, "metrics.json", json.dumps({"config": cfg.to_dict(), **metrics.to_dict()}, indent=2))
    return result, char, wg, metrics


def parse_values(text):
    """``start:stop:num`` (inclusive linspace) or a comma-separated list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError("values must be start:stop:num", key="values")
        return list(np.linspace(parse_real(parts[0]), parse_real(parts[1]), int(parse_real(parts[2]))))
    return [parse_real(v) for v in text.split(",") if v.strip()]


def _swept(cfg, param, value):
    if param == "zeta_abs":
        phase = cmath.exp(1j * cmath.phase(complex(cfg.zeta))) if cfg.zeta != 0 else 1.0
        return replace(cfg, zeta=value * phase)
    if param == "duration":
        # squeezing grows linearly with interaction time at fixed coupling
        if cfg.duration <= 0:
            raise ConfigError("duration sweep needs a positive reference duration", key="duration")
        return replace(cfg, zeta=complex(cfg.zeta) * value / cfg.duration, duration=value)
    if param == "gamma":
        return replace(cfg, gamma=value)
    if param == "phi":
        return replace(cfg, circuit="arbitrary_two_constituent", phi=value, c=None, zeta2=None)
    if param == "c":
        return replace(cfg, circuit="arbitrary_two_constituent", c=value, phi=None, zeta2=None)
    raise ConfigError(f"unknown sweep parameter {param!r}; expected one of {', '.join(SWEEP_PARAMS)}", key="param")


SWEEP_METRICS = ("wln", "min_w", "var_x", "var_p")


def _run_or_none(cfg, parity=None, seq=None):
    try:
        return execute(seq or build_sequence(cfg, parity), leak_tol=cfg.leak_tol)
    except HeraldImpossibleError:
        return None


def _prob(result):
    return 0.0 if result is None else result.herald_probability


def sweep_row(cfg, param, value, metrics=(), idle=True):
    vcfg = _swept(cfg, param, value)
    even = _run_or_none(vcfg, "even")
    odd = _run_or_none(vcfg, "odd")
    row = {"value": value, "p_even": _prob(even), "p_odd": _prob(odd)}
    if idle:
        base = idle_baseline(build_sequence(vcfg, "even"))
        row["p_idle_baseline"] = _prob(_run_or_none(vcfg, seq=base))
    selected = even if vcfg.parity == "even" else odd
    if selected is None:
        # the selected herald cannot fire at this value; no state to characterise
        row.update({key: math.nan for key in metrics})
        if param == "phi":
            row.update(n_maxima=0, maxima_args="")
        return row
    if metrics:
        _, _, wg = tomography(replace(vcfg, shots=None), selected.state)
        m = analysis.metrics_from_wigner(wg, selected.state, None, vcfg.mass_fraction)
        angle = None
        if param in ("c", "phi"):
            from .fock import generalized_squeezed_state

            first = generalized_squeezed_state(vcfg.k, vcfg.zeta, vcfg.n_max, None)
            angle = analysis.principal_angle(analysis.operator_covariance(first))
            m.var_x, m.var_p = analysis.quadrature_variances(wg, angle=angle)
        for key in metrics:
            row[key] = getattr(m, key)
    if param == "phi":
        args, ring = analysis.chi_ring(selected.state, vcfg.chi_radius)
        peaks = args[(ring > np.roll(ring, 1)) & (ring > np.roll(ring, -1))]
        row["n_maxima"] = len(peaks)
        row["maxima_args"] = ";".join(f"{a:.4f}" for a in peaks)
    return row


def cmd_sweep(cfg, param, values, metrics=(), idle=True, workers=1):
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"unknown sweep parameter {param!r}; expected one of {', '.join(SWEEP_PARAMS)}", key="param")
    bad = [m for m in metrics if m not in SWEEP_METRICS]
    if bad:
        raise ConfigError(f"unknown metric {bad[0]!r}", key="metrics")
    # values are independent; numpy releases the GIL in the heavy kernels
    with ThreadPoolExecutor(max(1, workers)) as pool:
        rows = list(pool.map(lambda v: sweep_row(cfg, param, v, metrics, idle), sorted(values)))
    out = Path(cfg.out)
    if cfg.format == "csv":
        cols = list(rows[0]) if rows else ["value", "p_even", "p_odd"]
        buf = io.StringIO()
        w = csv.DictWriter(buf, cols, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        _write(out, "sweep.csv", _config_comment(cfg) + buf.getvalue())
    else:
        _write(out, "sweep.json", json.dumps({"config": cfg.to_dict(), "param": param, "rows": rows}, indent=2))
    return rows


def table_b1(cfg, modes=("ideal", "realistic")):
    """WLN and min(W) of the even/odd squeezed superpositions, ideal and with noise."""
    rows = []
    for label, preset in (("even", "fig2b"), ("odd", "fig2c")):
        base = load_preset(preset)
        base = replace(base, beta_max=cfg.beta_max, grid_n=cfg.grid_n, mass_fraction=cfg.mass_fraction)
        for mode in modes:
            rcfg = replace(base, noise=(mode == "realistic"), nbar0=cfg.nbar0, ndot=cfg.ndot)
            result = run_config(rcfg)
            _, _, wg = tomography(replace(rcfg, shots=None), result.state)
            m = analysis.metrics_from_wigner(wg, result.state, result.herald_probability, rcfg.mass_fraction)
            rows.append((label, mode, m.wln, m.min_w, m.wln_unwindowed))
    return rows


def cmd_table(cfg, name):
    if name != "tableB1":
        raise ConfigError(f"unknown table {name!r}; expected tableB1", key="table")
    rows = table_b1(cfg)
    out = Path(cfg.out)
    if cfg.format == "csv":
        _write(out, "tableB1.csv", _config_comment(cfg) + analysis.table_csv(rows))
    else:
        recs = [dict(zip(analysis.TABLE_HEADER, r)) for r in rows]
        _write(out, "tableB1.json", json.dumps({"config": cfg.to_dict(), "rows": recs}, indent=2))
    return rows


# -- argument handling ------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--preset")
    common.add_argument("--config")
    common.add_argument("--noise", action="store_true", help="enable thermal start and heating")
    common.add_argument("--detection", action="store_true", help="attach the Poisson readout model")
    common.add_argument("--shots", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--nmax", type=int)
    common.add_argument("--out")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--exact", action="store_true", help="exact characteristic function (no shot noise)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")

    parser = _Parser(prog="hybridosc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("run", parents=[common])
    sw = sub.add_parser("sweep", parents=[common])
    sw.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    sw.add_argument("--values", required=True)
    sw.add_argument("--metrics", default="")
    sw.add_argument("--no-idle", action="store_true")
    sw.add_argument("--workers", type=int, default=1)
    sub.add_parser("wigner", parents=[common])
    tb = sub.add_parser("table", parents=[common])
    tb.add_argument("name", nargs="?", default="tableB1")
    sub.add_parser("presets")
    return parser


def resolve_config(args):
    cfg = load_preset(args.preset) if args.preset else ExperimentConfig()
    if args.config:
        cfg = parse_config_text(Path(args.config).read_text(), cfg)
    if args.set:
        cfg = parse_config_text("\n".join(args.set), cfg)
    overrides = {}
    if args.noise:
        overrides["noise"] = True
    if args.detection:
        overrides["detection"] = True
    if args.shots is not None:
        overrides["shots"] = args.shots
    if args.exact:
        overrides["shots"] = None
    for arg, key in (("seed", "seed"), ("nmax", "n_max"), ("out", "out"), ("format", "format")):
        val = getattr(args, arg)
        if val is not None:
            overrides[key] = val
    return replace(cfg, **overrides).validate()


def _error(exc, code):
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    key = getattr(exc, "key", None)
    if key is not None:
        payload["key"] = key
    print(json.dumps(payload), file=sys.stderr)
    return code


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        if args.command == "presets":
            print("\n".join(preset_names()))
            return 0
        cfg = resolve_config(args)
        if args.command == "run":
            payload, metrics = cmd_run(cfg)
            print(json.dumps({"herald_probability": payload["herald_probability"], "wln": metrics.wln}))
        elif args.command == "sweep":
            metrics = tuple(m for m in args.metrics.split(",") if m)
            cmd_sweep(cfg, args.param, parse_values(args.values), metrics, not args.no_idle, args.workers)
        elif args.command == "wigner":
            _, _, _, metrics = cmd_wigner(cfg)
            print(metrics.to_json())
        elif args.command == "table":
            cmd_table(cfg, args.name)
        return 0
    except (ConfigError, ParseError) as exc:
        return _error(exc, 2)
    except OSError as exc:
        return _error(ConfigError(str(exc)), 2)
    except HybridOscError as exc:
        return _error(exc, 1)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return _error(exc, 1)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface: state files in, reports out.

Exit codes: 0 success, 2 malformed state file, 3 invalid state,
4 bad arguments.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .correlation import OptimizerConfig, c_multipartite
from .correlation.bounds import bounds_report
from .correlation.oracle import brute_force_oracle
from .qcore import DimensionError, InvalidStateError, Operator, PureState, validate_density
from .states import ket, werner
from .weakvalue import GridTooCoarse, VanishingPostselection, infer_weak_value, pointer_readout, weak_value

FORMAT_VERSION = "1"
EXIT_OK, EXIT_PARSE, EXIT_STATE, EXIT_ARGS = 0, 2, 3, 4

OBSERVABLES = {
    "X": [[0, 1], [1, 0]],
    "Y": [[0, -1j], [1j, 0]],
    "Z": [[1, 0], [0, -1]],
    "P0": [[1, 0], [0, 0]],
    "P1": [[0, 0], [0, 1]],
}


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# ------------------------------------------------------------------ state files


def _bundled(name: str) -> Path | None:
    ref = resources.files("wcorr") / "data" / name
    return Path(str(ref)) if ref.is_file() else None


def resolve_state_path(path: str) -> Path:
    """Use ``path`` if it exists, else a bundled state of the same file name."""
    p = Path(path)
    if p.is_file():
        return p
    b = _bundled(p.name)
    if b is not None:
        return b
    raise CliError(EXIT_PARSE, f"state file not found: {path}")


def _complex_entries(rows) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise ValueError("matrix must be nested rows of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def parse_state(obj):
    """Turn a decoded state file into a ``PureState`` or ``DensityMatrix``."""
    try:
        dims = tuple(int(d) for d in obj["dims"])
        kind = obj.get("kind", "density")
        m = _complex_entries(obj["matrix"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(EXIT_PARSE, f"malformed state file: {exc}") from None
    if kind not in ("density", "pure"):
        raise CliError(EXIT_PARSE, f"unknown state kind {kind!r}")
    try:
        if kind == "pure":
            if m.shape[0] != 1:
                raise CliError(EXIT_PARSE, "a pure state needs exactly one row of amplitudes")
            return PureState(m[0], dims)
        return validate_density(Operator(m, dims))
    except DimensionError as exc:
        raise CliError(EXIT_PARSE, f"malformed state file: {exc}") from None
    except InvalidStateError as exc:
        raise CliError(EXIT_STATE, f"invalid state ({type(exc).__name__}): {exc}") from None


def load_state(path: str):
    p = resolve_state_path(path)
    try:
        obj = json.loads(p.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(EXIT_PARSE, f"cannot parse {path}: {exc}") from None
    return parse_state(obj)


def state_to_obj(state) -> dict:
    if isinstance(state, PureState):
        rows, kind = [state.amplitudes], "pure"
    else:
        rows, kind = state.matrix, "density"
    return {
        "dims": list(state.dims),
        "kind": kind,
        "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in rows],
    }


def _density(state):
    return state.density() if isinstance(state, PureState) else state


# ------------------------------------------------------------------ reports


@dataclass
class RunReport:
    value: float
    measured: list[int]
    measurement_params: list[list[float]]
    postselection_params: list[list[float]]
    restart_spread: float
    evaluations: int
    config: dict
    wall_time: float | None = None
    format_version: str = FORMAT_VERSION
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        d = {
            "format_version": self.format_version,
            "value": self.value,
            "measured": self.measured,
            "measurement_params": self.measurement_params,
            "postselection_params": self.postselection_params,
            "restart_spread": self.restart_spread,
            "evaluations": self.evaluations,
            "config": self.config,
            "wall_time": self.wall_time,
        }
        if self.extra:
            d["extra"] = self.extra
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        d = json.loads(text)
        return cls(
            value=d["value"],
            measured=d["measured"],
            measurement_params=d["measurement_params"],
            postselection_params=d["postselection_params"],
            restart_spread=d["restart_spread"],
            evaluations=d["evaluations"],
            config=d["config"],
            wall_time=d.get("wall_time"),
            format_version=d["format_version"],
            extra=d.get("extra", {}),
        )

    def to_text(self) -> str:
        lines = [
            f"format_version: {self.format_version}",
            f"value: {self.value!r}",
            f"measured: {','.join(map(str, self.measured))}",
        ]
        for party, p in zip(self.measured, self.measurement_params):
            lines.append(f"measurement[{party}]: {' '.join(repr(x) for x in p)}")
        for party, p in enumerate(self.postselection_params):
            lines.append(f"postselection[{party}]: {' '.join(repr(x) for x in p)}")
        lines.append(f"restart_spread: {self.restart_spread!r}")
        lines.append(f"evaluations: {self.evaluations}")
        for k in sorted(self.config):
            lines.append(f"config.{k}: {self.config[k]!r}")
        if self.wall_time is not None:
            lines.append(f"wall_time: {self.wall_time:.3f}")
        return "\n".join(lines) + "\n"


def _kv_text(d: dict, prefix: str = "") -> str:
    out = []
    for k, v in d.items():
        if isinstance(v, dict):
            out.append(_kv_text(v, f"{prefix}{k}."))
        else:
            out.append(f"{prefix}{k}: {v!r}\n")
    return "".join(out)


def _emit(args, text: str):
    if args.out:
        Path(args.out).write_text(text, newline="\n")
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


# ------------------------------------------------------------------ arguments


def parse_measured(spec: str, n_parties: int) -> list[int]:
    """``"A"``, ``"AB"``, ... or a comma-separated index list such as ``"0,2"``."""
    s = spec.strip()
    try:
        if s and s.isalpha():
            parties = [ord(c) - ord("A") for c in s.upper()]
        else:
            parties = [int(x) for x in s.split(",")]
    except ValueError:
        raise CliError(EXIT_ARGS, f"bad party spec {spec!r}") from None
    if not parties or len(set(parties)) != len(parties) or any(not 0 <= p < n_parties for p in parties):
        raise CliError(EXIT_ARGS, f"bad party spec {spec!r} for {n_parties} parties")
    return sorted(parties)


def config_from(args) -> OptimizerConfig:
    try:
        return OptimizerConfig(
            inner_restarts=args.restarts_inner,
            outer_restarts=args.restarts_outer,
            tol=args.tol,
            seed=args.seed,
        )
    except (ValueError, TypeError) as exc:
        raise CliError(EXIT_ARGS, str(exc)) from None


def config_echo(cfg: OptimizerConfig) -> dict:
    return {
        "inner_restarts": cfg.inner_restarts,
        "outer_restarts": cfg.outer_restarts,
        "tol": cfg.tol,
        "max_iterations": cfg.max_iterations,
        "seed": cfg.seed,
    }


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_ARGS)


def _optimizer_flags(p):
    d = OptimizerConfig()
    p.add_argument("--restarts-inner", type=int, default=d.inner_restarts)
    p.add_argument("--restarts-outer", type=int, default=d.outer_restarts)
    p.add_argument("--tol", type=float, default=d.tol)
    p.add_argument("--seed", type=int, default=d.seed)


def _common(p, state=True):
    if state:
        p.add_argument("--state", required=True, help="state file (bundled names such as bell.json also work)")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.add_argument("--out", help="write the report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wcorr", description="Postselection-based nonclassical correlation quantifiers.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("compute", help="one- or multi-sided quantifier of a state")
    _common(p)
    p.add_argument("--measured", default="A")
    p.add_argument("--timing", action="store_true", help="include wall_time (output is then not reproducible)")
    _optimizer_flags(p)

    p = sub.add_parser("sweep-werner", help="one-sided value along the Werner family, as CSV")
    _common(p, state=False)
    p.add_argument("--pmin", type=float, default=0.0)
    p.add_argument("--pmax", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=11)
    _optimizer_flags(p)

    p = sub.add_parser("witness", help="value next to its upper bounds")
    _common(p)
    p.add_argument("--measured", default="A")
    _optimizer_flags(p)

    p = sub.add_parser("oracle", help="grid min-max reference for two qubits")
    _common(p)
    p.add_argument("--measured", default="A")
    p.add_argument("--grid", type=int, default=30)
    p.add_argument("--seed", type=int, default=0, help="accepted for uniformity; the grid is deterministic")

    p = sub.add_parser("pointer", help="simulated pointer readout of a qubit weak value")
    _common(p)
    p.add_argument("--observable", default="P0", help=f"one of {', '.join(OBSERVABLES)}")
    p.add_argument("--postselect", default="+i", help="ket label: 0, 1, +, -, +i, -i")
    p.add_argument("--g", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0, help="accepted for uniformity; the simulation is deterministic")
    return parser


# ------------------------------------------------------------------ commands


def cmd_compute(args) -> str:
    state = load_state(args.state)
    cfg = config_from(args)
    measured = parse_measured(args.measured, len(state.dims))
    if len(state.dims) < 2:
        raise CliError(EXIT_ARGS, "the quantifier needs at least two parties")
    t0 = time.perf_counter()
    res = c_multipartite(_density(state), measured, cfg)
    elapsed = time.perf_counter() - t0
    d = res.to_dict()
    report = RunReport(
        value=d["value"],
        measured=d["measured"],
        measurement_params=d["measurement_params"],
        postselection_params=d["postselection_params"],
        restart_spread=d["restart_spread"],
        evaluations=d["evaluations"],
        config=config_echo(cfg),
        wall_time=elapsed if args.timing else None,
    )
    return report.to_json() + "\n" if args.json else report.to_text()


def cmd_sweep_werner(args) -> str:
    if not (0.0 <= args.pmin <= args.pmax <= 1.0) or args.steps < 2:
        raise CliError(EXIT_ARGS, "need 0 <= pmin <= pmax <= 1 and steps >= 2")
    cfg = config_from(args)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p", "value", "restart_spread"])
    for p in np.linspace(args.pmin, args.pmax, args.steps):
        p = float(round(p, 12))
        res = c_multipartite(werner(p), [0], cfg)
        w.writerow([repr(p), repr(res.value), repr(res.restart_spread)])
    return buf.getvalue()


def cmd_witness(args) -> str:
    state = load_state(args.state)
    cfg = config_from(args)
    measured = parse_measured(args.measured, len(state.dims))
    rep = bounds_report(state, measured, cfg)
    d = rep.to_dict()
    d["format_version"] = FORMAT_VERSION
    return json.dumps(d, sort_keys=True) + "\n" if args.json else _kv_text(d)


def cmd_oracle(args) -> str:
    state = load_state(args.state)
    if tuple(state.dims) != (2, 2):
        raise CliError(EXIT_ARGS, "the grid oracle handles two-qubit states only")
    measured = parse_measured(args.measured, 2)
    if args.grid < 2:
        raise CliError(EXIT_ARGS, "grid must be at least 2")
    val = brute_force_oracle(_density(state), measured, args.grid)
    d = {"format_version": FORMAT_VERSION, "value": val, "grid": args.grid, "measured": measured}
    return json.dumps(d, sort_keys=True) + "\n" if args.json else _kv_text(d)


def cmd_pointer(args) -> str:
    state = load_state(args.state)
    if tuple(state.dims) != (2,):
        raise CliError(EXIT_ARGS, "the pointer command takes a single-qubit state")
    if args.observable not in OBSERVABLES:
        raise CliError(EXIT_ARGS, f"unknown observable {args.observable!r}")
    try:
        phi = ket(args.postselect)
    except ValueError as exc:
        raise CliError(EXIT_ARGS, str(exc)) from None
    if not args.g > 0:
        raise CliError(EXIT_ARGS, "g must be positive")
    o = np.array(OBSERVABLES[args.observable], dtype=complex)
    rho = _density(state)
    try:
        exact = weak_value(o, rho, phi)
        dq, dp = pointer_readout(o, rho, phi, g=args.g)
    except (VanishingPostselection, GridTooCoarse) as exc:
        raise CliError(EXIT_ARGS, str(exc)) from None
    inferred = infer_weak_value(dq, dp, args.g)
    d = {
        "format_version": FORMAT_VERSION,
        "g": args.g,
        "delta_q": dq,
        "delta_p": dp,
        "inferred_re": inferred.real,
        "inferred_im": inferred.imag,
        "exact_re": exact.re,
        "exact_im": exact.im,
    }
    return json.dumps(d, sort_keys=True) + "\n" if args.json else _kv_text(d)


COMMANDS = {
    "compute": cmd_compute,
    "sweep-werner": cmd_sweep_werner,
    "witness": cmd_witness,
    "oracle": cmd_oracle,
    "pointer": cmd_pointer,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        text = COMMANDS[args.command](args)
    except CliError as exc:
        sys.stderr.write(f"wcorr: {exc}\n")
        return exc.code
    _emit(args, text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

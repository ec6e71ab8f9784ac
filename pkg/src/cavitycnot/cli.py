"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import INPUT_CHOICES, ConfigError, RunConfig, SweepSpec, override, parse_config
from .darkstates import block_dimensions, verify_step
from .dynamics import NumericalError, ProtocolResult, run_protocol
from .gateanalysis import (
    CNOT,
    extract_gate,
    gate_fidelity,
    matrix_to_json,
    state_fidelity,
    target_composition,
    truth_table,
)
from .hamiltonian import interaction_hamiltonian
from .pulses import CAVITY_STIRAP, active_couplings
from .statespace import COMPUTATIONAL_STATES, HilbertSpace, ket

log = logging.getLogger("cavitycnot")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VERIFY = 4

SWEEP_COLUMNS = ("value", "retention_00", "retention_01", "exchange_10", "exchange_11", "status")


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def input_vector(space: HilbertSpace, label: str) -> np.ndarray:
    if label == "bell":
        return space.superposition({ket("00"): 1.0, ket("11"): 1.0})
    return space.basis_vector(ket(label))


def expected_output(space: HilbertSpace, psi0: np.ndarray, phases: Sequence[float]) -> np.ndarray:
    """Ideal final state: the phase-decorated CNOT applied to a computational input."""
    idx = space.indices(COMPUTATIONAL_STATES)
    out = np.zeros(space.dim, dtype=complex)
    out[idx] = target_composition(phases) @ psi0[idx]
    return out


def selected_inputs(config: RunConfig) -> list[str]:
    return ["00", "01", "10", "11"] if config.input == "all" else [config.input]


def simulate(config: RunConfig, label: str) -> ProtocolResult:
    space = config.space()
    return run_protocol(
        config.schedule(),
        config.cavity(),
        config.lindblad(),
        input_vector(space, label),
        config.integrator(),
        space,
    )


def _ensure_dir(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise ConfigError("out_dir", f"cannot create {path}: {err.strerror}") from None
    return path


def cmd_simulate(config: RunConfig) -> int:
    out = _ensure_dir(Path(config.out_dir))
    space = config.space()
    summary = {"config": config.to_dict(), "runs": {}}
    for label in selected_inputs(config):
        log.info("simulating input %s", label)
        result = simulate(config, label)
        with open(out / f"timeseries_{label}.csv", "w", newline="") as fh:
            result.series.to_csv(fh)
        run = result.summary()
        target = expected_output(space, input_vector(space, label), config.phases)
        run["target_fidelity"] = state_fidelity(result.final, target)
        summary["runs"][label] = run
    (out / "summary.json").write_text(_dumps(summary))
    print(f"wrote {out}")
    return EXIT_OK


def sweep_row(config: RunConfig) -> dict:
    """Retention of |00>, |01> and exchange of |10> <-> |11> for one configuration."""
    targets = {"00": "00", "01": "01", "10": "11", "11": "10"}
    row = {}
    try:
        for label, dst in targets.items():
            result = simulate(config.replace(input=label), label)
            key = ("retention_" if label == dst else "exchange_") + label
            row[key] = result.population(ket(dst))
        row["status"] = "ok"
    except (NumericalError, ValueError) as err:
        row = {"status": f"error: {err}"}
    return row


def run_sweep(spec: SweepSpec, jobs: int = 1) -> list[dict]:
    configs = spec.configs()
    if jobs > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(sweep_row, configs))
    else:
        rows = [sweep_row(c) for c in configs]
    return [{"value": getattr(c, spec.parameter), **r} for c, r in zip(configs, rows)]


def _number(x) -> str:
    return "none" if x is None else repr(float(x))


def sweep_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for r in rows:
        writer.writerow(
            [_number(r["value"])]
            + [_number(r[c]) if c in r else "" for c in SWEEP_COLUMNS[1:-1]]
            + [r["status"]]
        )
    return buf.getvalue()


def cmd_sweep(spec: SweepSpec, jobs: int = 1) -> int:
    out = _ensure_dir(Path(spec.base.out_dir))
    rows = run_sweep(spec, jobs)
    text = sweep_csv(rows)
    (out / "sweep.csv").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_truth_table(config: RunConfig) -> int:
    out = _ensure_dir(Path(config.out_dir))
    results = [simulate(config, s.atom1.symbol + s.atom2.symbol) for s in COMPUTATIONAL_STATES]
    table = truth_table(results)
    target = target_composition(config.phases)
    report = {
        "engine": results[0].engine,
        "truth_table": table.matrix.tolist(),
        "failed_rows": table.failed,
        "target_truth_table": (np.abs(target) ** 2).T.tolist(),
    }
    if config.lindblad() is None:
        gate = extract_gate(config.schedule(), config.cavity(), config.integrator(), config.space())
        report.update(
            gate=matrix_to_json(gate.matrix),
            unitarity_deviation=gate.unitarity_deviation,
            flagged=gate.flagged,
            fidelity_to_target=gate.fidelity(target),
            fidelity_to_cnot=gate.fidelity(CNOT),
        )
    text = _dumps(report)
    (out / "truth_table.json").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK if table.ok else EXIT_VERIFY


def cmd_compose_phases(config: RunConfig, simulate_gate: bool = False) -> int:
    target = target_composition(config.phases)
    report = {"phases": list(config.phases), "target": matrix_to_json(target)}
    if simulate_gate:
        gate = extract_gate(config.schedule(), config.cavity(), config.integrator(), config.space())
        report.update(
            gate=matrix_to_json(gate.matrix),
            unitarity_deviation=gate.unitarity_deviation,
            fidelity=gate_fidelity(gate.matrix, target),
        )
    sys.stdout.write(_dumps(report))
    return EXIT_OK


def cmd_verify_darkstates(config: RunConfig, n_samples: int = 401) -> int:
    space = config.space()
    schedule = config.schedule()
    cavity = config.cavity()
    failed = False
    for step in schedule.steps:
        rep = verify_step(space, schedule, step, cavity, n_samples)
        ok = rep.ok()
        failed |= not ok
        kdim = "-" if rep.kernel_dim_7 == (0, 0) else f"{rep.kernel_dim_7[0]}..{rep.kernel_dim_7[1]}"
        print(
            f"step {step.index}: residual {rep.max_residual:.2e}  excited {rep.max_excited_amplitude:.1e}  "
            f"kernel7 {kdim}  geometric {rep.geometric_max:.2e}"
            f"{'' if rep.geometric_converged else ' (unconverged)'}  {'ok' if ok else 'FAIL'}"
        )
        if step.kind == CAVITY_STIRAP:
            dims = {k: len(v) for k, v in block_dimensions(space, step, cavity).items()}
            if dims != {"H1": 1, "H7": 7, "H16": 16}:
                failed = True
                print(f"step {step.index}: unexpected block dimensions {dims}  FAIL")
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_dump_basis(space: HilbertSpace, fh) -> int:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["index", "atom1", "atom2", "photons"])
    for i, s in enumerate(space.states):
        writer.writerow([i, s.atom1.value, s.atom2.value, s.photons])
    return EXIT_OK


def cmd_dump_hamiltonian(config: RunConfig, t: float, fh) -> int:
    schedule = config.schedule()
    if not schedule.t_start <= t <= schedule.t_end:
        raise ConfigError("time", f"must lie in [{schedule.t_start}, {schedule.t_end}]")
    space = config.space()
    H = interaction_hamiltonian(space, active_couplings(schedule, t), config.cavity())
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["row", "col", "re", "im"])
    for i, j in zip(*np.nonzero(H)):
        writer.writerow([i, j, repr(float(H[i, j].real)), repr(float(H[i, j].imag))])
    return EXIT_OK


def _load_config(args) -> RunConfig:
    config = RunConfig()
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as err:
            raise ConfigError("config", f"cannot read {args.config}: {err.strerror}") from None
        config = parse_config(text)
    if getattr(args, "out", None):
        config = config.replace(out_dir=args.out)
    if getattr(args, "input", None):
        config = config.replace(input=args.input)
    if getattr(args, "merged", False):
        config = config.replace(merged=True)
    for key, value in getattr(args, "set", None) or []:
        config = override(config, key, value)
    return config


def _key_value(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    key, value = text.split("=", 1)
    return key.strip(), value.strip()


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--out", help="output directory (overrides out_dir)")
    common.add_argument("--input", choices=INPUT_CHOICES, help="input state selector")
    common.add_argument("--merged", action="store_true", help="use the eleven-pulse schedule")
    common.add_argument(
        "--set", type=_key_value, action="append", metavar="KEY=VALUE", help="override a config key"
    )
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="cavitycnot", description="Adiabatic-passage CNOT gate in an optical cavity."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="run the protocol, write CSV + JSON")
    p = sub.add_parser("sweep", parents=[common], help="scan one numeric config key")
    p.add_argument("--param", required=True)
    p.add_argument("--values", default="", help="comma-separated values (may be empty)")
    p.add_argument("--jobs", type=int, default=1)
    sub.add_parser("truth-table", parents=[common], help="four basis runs and the gate matrix")
    p = sub.add_parser("compose-phases", parents=[common], help="phase-decorated target gate")
    p.add_argument("--phases", type=float, nargs=6, metavar="PHI")
    p.add_argument("--simulate", action="store_true", help="also extract the simulated gate")
    p = sub.add_parser("verify-darkstates", parents=[common], help="dark-state audit per step")
    p.add_argument("--samples", type=int, default=401)
    sub.add_parser("dump-basis", parents=[common], help="basis ordering as CSV")
    p = sub.add_parser("dump-hamiltonian", parents=[common], help="nonzero entries of H_I(t)")
    p.add_argument("--time", type=float, required=True)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s"
    )
    try:
        config = _load_config(args)
        if args.command == "simulate":
            return cmd_simulate(config)
        if args.command == "sweep":
            values = tuple(v for v in args.values.split(",") if v.strip())
            spec = SweepSpec(args.param, values, config)
            spec.configs()
            return cmd_sweep(spec, args.jobs)
        if args.command == "truth-table":
            return cmd_truth_table(config)
        if args.command == "compose-phases":
            if args.phases:
                config = config.replace(**{f"phi{i}": p for i, p in enumerate(args.phases, 1)})
            return cmd_compose_phases(config, args.simulate)
        if args.command == "verify-darkstates":
            return cmd_verify_darkstates(config, args.samples)
        if args.command == "dump-basis":
            return _with_output(args.out, "basis.csv", lambda fh: cmd_dump_basis(config.space(), fh))
        if args.command == "dump-hamiltonian":
            return _with_output(
                args.out, "hamiltonian.csv", lambda fh: cmd_dump_hamiltonian(config, args.time, fh)
            )
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    raise AssertionError(f"unhandled command {args.command}")


def _with_output(out: str | None, name: str, write) -> int:
    if out is None:
        return write(sys.stdout)
    path = _ensure_dir(Path(out)) / name
    with open(path, "w", newline="") as fh:
        return write(fh)


if __name__ == "__main__":
    sys.exit(main())

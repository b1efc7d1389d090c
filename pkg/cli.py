#!/usr/bin/env python3
"""
Chirpsim - Command Line Driver
Runs scenarios, writes CSV results, plot scripts and a run manifest

Usage:
    python cli.py simulate --config scenarios/anthracene_locking.json
    python cli.py parity-sweep --config scenarios/two_level_adiabatic.json --orders 2 3 4 5
    python cli.py gate --config scenarios/gate_two_level.json
    python cli.py beats --config scenarios/anthracene_beats.json --out runs/beats
"""

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from itertools import combinations
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from analysis import (IndeterminateOutcome, ParityScenario, beat_spectrum, dressed_character,
                      lock_report, parity_run, populations, robustness_grid, SpectrumError, WindowError)
from gates import ClassificationError, GateReport, cnot_truth_table
from propagator import DensityMatrix, IntegrationError, evolve_density, free_evolution
from pulse import PulseError, rad_per_ps_to_ghz
from quantum_system import (FMHamiltonian, HamiltonianError, dressed_frame, excited_submatrix,
                            static_hamiltonian)
from scenarios import (ConfigError, ScenarioConfig, SweepConfig, check_sweep_orders, load_env, load_scenario,
                       log_level, scenario_hash, thread_count, with_overrides)

TOOL_VERSION = "0.4.0"

logger = logging.getLogger("chirpsim")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PHYSICS = 2


def configure_logging(level: str = "INFO", log_path: Optional[Path] = None) -> None:
    """Console logging, plus a run.log in the output directory when given."""
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    if log_path is not None:
        log_path.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_path, encoding="utf-8"))
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        handlers=handlers,
        force=True,
    )


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    scenario: str
    scenario_hash: str
    tool_version: str
    command: str
    started: str
    finished: str = ""
    outputs: List[str] = field(default_factory=list)

    def write(self, out_dir: Path) -> Path:
        missing = [p for p in self.outputs if not Path(p).exists() or Path(p).stat().st_size == 0]
        if missing:
            raise RuntimeError(f"manifest lists missing or empty outputs: {missing}")
        self.finished = _utc_now()
        path = out_dir / "manifest.json"
        with open(path, "w") as f:
            json.dump(asdict(self), f, indent=2)
        return path


def _start_manifest(config: ScenarioConfig, command: str) -> RunManifest:
    return RunManifest(scenario=config.name, scenario_hash=scenario_hash(config), tool_version=TOOL_VERSION,
                       command=command, started=_utc_now())


def write_csv(path: Path, header: Sequence[str], columns: Sequence[np.ndarray]) -> Path:
    """Full double precision, comma separated, one header line."""
    table = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    np.savetxt(path, table, fmt="%.17g", delimiter=",", header=",".join(header), comments="")
    return path


PLOT_SCRIPT = '''#!/usr/bin/env python3
"""Plot {csv} (generated by chirpsim {version})."""

from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

here = Path(__file__).parent
data = np.genfromtxt(here / "{csv}", delimiter=",", names=True)
x = data.dtype.names[0]

fig, ax = plt.subplots(figsize=(8, 4.5))
for name in data.dtype.names[1:]:
    ax.plot(data[x], data[name], label=name, linewidth=1)
ax.set_xlabel("{xlabel}")
ax.set_ylabel("{ylabel}")
ax.set_title("{title}")
ax.legend(loc="best", fontsize="small")
fig.tight_layout()
fig.savefig(here / "{png}", dpi=150)
'''


def write_plot_script(out_dir: Path, csv_name: str, xlabel: str, ylabel: str, title: str) -> Path:
    stem = Path(csv_name).stem
    path = out_dir / f"plot_{stem}.py"
    path.write_text(PLOT_SCRIPT.format(csv=csv_name, version=TOOL_VERSION, xlabel=xlabel, ylabel=ylabel,
                                       title=title, png=f"{stem}.png"))
    return path


def run_simulate(config: ScenarioConfig, out_dir: Path) -> RunManifest:
    """Integrate the scenario from the ground state and write the requested artifacts."""
    manifest = _start_manifest(config, "simulate")
    out_dir.mkdir(parents=True, exist_ok=True)
    system, pulse = config.system, config.pulse
    hamiltonian = FMHamiltonian(pulse, system)

    print(f"⚛️  {config.name}: M={system.dim}, N={pulse.photon_order}, window [{pulse.start:g}, {pulse.end:g}] ps")
    traj = evolve_density(hamiltonian, DensityMatrix.ground(system.dim), pulse.window, config.integrator,
                          metadata={"scenario": config.name})
    series = populations(traj)
    times = traj.times
    written: List[Path] = []
    plots = "plots" in config.outputs

    if "populations" in config.outputs:
        written.append(write_csv(out_dir / "populations.csv", ["time_ps"] + [f"P{i}" for i in range(system.dim)],
                                 [times] + [series.level(i) for i in range(system.dim)]))
        if plots:
            written.append(write_plot_script(out_dir, "populations.csv", "time (ps)", "population", config.name))

    frame = None
    if "eigen" in config.outputs or "character" in config.outputs:
        frame = dressed_frame(times, hamiltonian)
    if "eigen" in config.outputs:
        written.append(write_csv(out_dir / "eigen.csv", ["time_ps"] + [f"E{i}" for i in range(system.dim)],
                                 [times] + [frame.eigenvalues[:, i] for i in range(system.dim)]))
        if plots:
            written.append(write_plot_script(out_dir, "eigen.csv", "time (ps)", "dressed energy (rad/ps)",
                                             f"{config.name}: dressed states"))
    if "character" in config.outputs:
        character = dressed_character(frame, 1)
        written.append(write_csv(out_dir / "character.csv", ["time_ps"] + [f"C{i}" for i in range(system.dim)],
                                 [times] + [character[:, i] for i in range(system.dim)]))
        if plots:
            written.append(write_plot_script(out_dir, "character.csv", "time (ps)", "bright-state weight",
                                             f"{config.name}: dressed-state character"))
    if "pulse" in config.outputs:
        written.append(write_csv(out_dir / "pulse.csv", ["time_ps", "envelope", "phi_dot"],
                                 [times, pulse.envelope_at(times), pulse.phi_dot(times)]))
        if plots:
            written.append(write_plot_script(out_dir, "pulse.csv", "time (ps)", "amplitude / rad/ps",
                                             f"{config.name}: pulse"))

    final = series.final
    print("   Final populations: " + "  ".join(f"P{i}={p:.6f}" for i, p in enumerate(final)))
    try:
        lock = lock_report(series, pulse)
        print(f"   FWHM window [{lock.window[0]:g}, {lock.window[1]:g}] ps: bright min={lock.min_bright:.4f} "
              f"mean={lock.mean_bright:.4f} max={lock.max_bright:.4f}")
    except WindowError as e:
        logger.debug("no lock report: %s", e)
    logger.info("trace deviation %.2e, hermiticity drift %.2e", traj.trace_deviation(), traj.hermiticity_drift())

    manifest.outputs = [str(p) for p in written]
    manifest.write(out_dir)
    print(f"💾 {len(written)} files written to {out_dir}")
    return manifest


def run_parity_sweep(config: ScenarioConfig, out_dir: Path, orders: Optional[Sequence[int]] = None,
                     grid: bool = False, workers: Optional[int] = None) -> List[Dict[str, Any]]:
    """
    One row per chirp order on the ground + bright reduction; rows that fail
    carry an 'error' entry.
    """
    sweep = config.sweep or SweepConfig()
    if orders is not None:
        check_sweep_orders("--orders", orders)
    orders = list(sweep.orders if orders is None else orders)
    system = config.system.two_level_reduction()
    if config.system.dim > 2:
        logger.warning("parity sweep uses the two-level reduction of the %d-level system", config.system.dim)
    scenario = ParityScenario(config.pulse, system, sweep.sweep_at_fwhm, config.integrator, sweep.threshold)
    manifest = _start_manifest(config, "parity-sweep")
    out_dir.mkdir(parents=True, exist_ok=True)

    print(f"📊 Chirp-order sweep over {len(orders)} orders on {system.name or 'two-level system'}")
    print("=" * 60)

    def run(order: int) -> Dict[str, Any]:
        try:
            result = parity_run(order, scenario)
        except (PulseError, IntegrationError) as e:
            return {"order": order, "error": str(e)}
        return {"order": order, "p_excited": result.p_excited, "p_ground": result.p_ground,
                "outcome": result.outcome.value if result.outcome else "indeterminate"}

    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(run, orders))

    for i, row in enumerate(rows, 1):
        if "error" in row:
            print(f"[{i}/{len(rows)}] b_{row['order']}: ❌ {row['error']}")
        else:
            print(f"[{i}/{len(rows)}] b_{row['order']}: P_excited={row['p_excited']:.6f} "
                  f"P_ground={row['p_ground']:.6f} -> {row['outcome']}")

    summary: Dict[str, Any] = {"rows": rows}
    if grid:
        print("\n🔁 Envelope x Rabi-scale robustness grid")
        summary["grid"] = robustness_grid(scenario, orders, sweep.shapes, (1.0,) + tuple(sweep.rabi_scales),
                                          workers=workers)
        for cell in summary["grid"]:
            status = cell.get("outcome") or f"❌ {cell.get('error')}"
            print(f"   {cell['shape']:>8} x{cell['rabi_scale']:<4g} b_{cell['order']}: {status}")

    path = out_dir / "parity_sweep.json"
    with open(path, "w") as f:
        json.dump(summary, f, indent=2)
    manifest.outputs = [str(path)]
    manifest.write(out_dir)
    print(f"\n💾 Summary saved to {path}")
    return rows


def run_gate(config: ScenarioConfig, out_dir: Path, threshold: Optional[float] = None,
             workers: Optional[int] = None) -> GateReport:
    """
    Truth table on the ground + bright reduction; for multilevel systems the
    full system is evaluated as well and reported separately.
    """
    if config.gate is None:
        raise ConfigError("gate", "scenario has no gate section")
    threshold = config.gate.threshold if threshold is None else threshold
    manifest = _start_manifest(config, "gate")
    out_dir.mkdir(parents=True, exist_ok=True)

    reduced = config.system.two_level_reduction()
    print(f"🔀 CNOT truth table on {reduced.name or 'two-level system'} (threshold {threshold:g})")
    print("=" * 60)
    report = cnot_truth_table(config.gate.inverting, config.gate.dark, reduced, threshold,
                              config.integrator, workers)
    print(report.render())
    print(f"\n{'✅ PASS' if report.passed else '❌ FAIL'}")

    summary = {"two_level": _report_dict(report)}
    if config.system.dim > 2:
        print(f"\n🔀 Full {config.system.dim}-level system (bright-state readout)")
        print("-" * 60)
        full = cnot_truth_table(config.gate.inverting, config.gate.dark, config.system, threshold,
                                config.integrator, workers, check_pulses=False)
        print(full.render())
        print(f"\n{'✅' if full.passed else '⚠️ '} multilevel fidelity bounded by dark-state dephasing")
        summary["multilevel"] = _report_dict(full)

    path = out_dir / "gate_report.json"
    with open(path, "w") as f:
        json.dump(summary, f, indent=2)
    manifest.outputs = [str(path)]
    manifest.write(out_dir)
    return report


def _report_dict(report: GateReport) -> Dict[str, Any]:
    return {"system": report.system_name, "threshold": report.threshold, "passed": report.passed,
            "rows": [asdict(r) for r in report.rows]}


def run_beats(config: ScenarioConfig, out_dir: Path):
    """Drive through the pulse window, then record exact field-free evolution and its spectrum."""
    beats = config.beats
    if beats is None:
        raise ConfigError("beats", "scenario has no beats section")
    manifest = _start_manifest(config, "beats")
    out_dir.mkdir(parents=True, exist_ok=True)
    system, pulse = config.system, config.pulse

    print(f"🎵 Quantum beats: {config.name}, {beats.samples} samples over {beats.record_ps:g} ps")
    driven = evolve_density(FMHamiltonian(pulse, system), DensityMatrix.ground(system.dim), pulse.window,
                            config.integrator)
    dt = beats.record_ps / beats.samples
    times = pulse.end + dt * np.arange(beats.samples)
    record = free_evolution(driven.final, static_hamiltonian(system), times, t0=pulse.end)
    series = populations(record)
    spectrum = beat_spectrum(series, beats.level)

    energies = np.linalg.eigvalsh(excited_submatrix(system))
    differences = np.array(sorted(abs(a - b) for a, b in combinations(energies, 2)))
    print(f"   Resolution: {rad_per_ps_to_ghz(spectrum.resolution):.4f} GHz")
    for peak in spectrum.peaks:
        nearest = differences[np.argmin(np.abs(differences - peak))] if differences.size else float("nan")
        print(f"   peak {rad_per_ps_to_ghz(peak):8.4f} GHz  (nearest level spacing {rad_per_ps_to_ghz(nearest):8.4f} GHz)")

    written = [
        write_csv(out_dir / "beat_populations.csv", ["time_ps"] + [f"P{i}" for i in range(system.dim)],
                  [times] + [series.level(i) for i in range(system.dim)]),
        write_csv(out_dir / "beats.csv", ["freq_ghz", "power"],
                  [rad_per_ps_to_ghz(spectrum.frequencies), spectrum.power]),
        write_plot_script(out_dir, "beats.csv", "frequency (GHz)", "power", f"{config.name}: beat spectrum"),
    ]
    if spectrum.peaks.size:
        written.append(write_csv(out_dir / "beat_peaks.csv", ["peak_rad_per_ps", "peak_ghz"],
                                 [spectrum.peaks, rad_per_ps_to_ghz(spectrum.peaks)]))
    manifest.outputs = [str(p) for p in written]
    manifest.write(out_dir)
    print(f"💾 {len(written)} files written to {out_dir}")
    return spectrum


class CliParser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> CliParser:
    common = CliParser(add_help=False)
    common.add_argument("--config", required=True, help="scenario JSON file")
    common.add_argument("--out", help="output directory (default: runs/<scenario name>)")
    common.add_argument("--step", type=float, help="fixed RK4 step in ps")
    common.add_argument("--preset", help="replace the scenario's system with a named preset")
    common.add_argument("--verbose", action="store_true", help="debug logging")

    parser = CliParser(prog="chirpsim", description="Chirped-pulse population dynamics")
    parser.add_argument("--version", action="version", version=f"chirpsim {TOOL_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("simulate", parents=[common], help="integrate one scenario and write CSVs")
    sweep = sub.add_parser("parity-sweep", parents=[common], help="classify single-term chirp orders")
    sweep.add_argument("--orders", type=int, nargs="*", help="chirp orders (default: from the scenario)")
    sweep.add_argument("--grid", action="store_true", help="also sweep envelope shapes and Rabi scales")
    gate = sub.add_parser("gate", parents=[common], help="evaluate the CNOT truth table")
    gate.add_argument("--threshold", type=float, help="fidelity threshold (default: from the scenario)")
    sub.add_parser("beats", parents=[common], help="post-pulse quantum-beat spectrum")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_env()
    args = build_parser().parse_args(argv)

    try:
        config = with_overrides(load_scenario(args.config), step=args.step, preset_name=args.preset)
        out_dir = Path(args.out) if args.out else Path("runs") / config.name
        configure_logging("DEBUG" if args.verbose else log_level(), out_dir / "run.log")
        workers = thread_count()

        if args.command == "simulate":
            run_simulate(config, out_dir)
            return EXIT_OK
        if args.command == "parity-sweep":
            rows = run_parity_sweep(config, out_dir, args.orders, args.grid, workers)
            failed = [r for r in rows if "error" in r or r.get("outcome") == "indeterminate"]
            return EXIT_PHYSICS if failed else EXIT_OK
        if args.command == "gate":
            report = run_gate(config, out_dir, args.threshold, workers)
            return EXIT_OK if report.passed else EXIT_PHYSICS
        run_beats(config, out_dir)
        return EXIT_OK

    except (ConfigError, PulseError, HamiltonianError) as e:
        print(f"❌ Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, ClassificationError, IndeterminateOutcome, SpectrumError) as e:
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_PHYSICS


if __name__ == "__main__":
    sys.exit(main())

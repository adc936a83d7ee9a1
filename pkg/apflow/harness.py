"""
Run orchestration and output files for the ``run`` and ``converge`` commands.
"""

import csv
import logging
import multiprocessing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import yaml

from .config import RunConfig
from .diagnostics import (
    EnergyRecorder,
    EocRow,
    IdentityRecorder,
    ap_indicators,
    eoc_table,
    l2_error,
    lambda_range,
    mach_number_ratio,
    restrict,
)
from .errors import ApflowError, NonNestedGrids
from .grid import FLAT_ORDER, Grid
from .operators import ScalarField, VectorField, div_array
from .scheme import FluidParams, RunResult, State, StepOutcome, run
from .settings import OUTPUT_CONFIG, get_default_workers, get_output_dir

logger = logging.getLogger(__name__)


def format_value(value: Any) -> str:
    """Shortest round-trip text for floats; blanks for missing values."""
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return repr(float(value))


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence[Any]]):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator=OUTPUT_CONFIG["line_terminator"])
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(v) for v in row])


def write_energies(path: Path, records) -> None:
    columns = OUTPUT_CONFIG["energies_columns"]
    write_csv(path, columns, ([r.as_row()[c] for c in columns] for r in records))


def write_fields(path: Path, state: State, fluid: FluidParams, background: Sequence[float] = ()) -> None:
    """One row per cell (axis 0 fastest): x[,y], rho, u1[,u2], div_u[, mach]."""
    grid = state.grid
    u = state.velocity().components
    coords = grid.centers()
    columns = ["x", "y"][: grid.dim] + ["rho"] + [f"u{i + 1}" for i in range(grid.dim)] + ["div_u"]
    arrays = list(coords) + [state.rho.values] + list(u) + [div_array(u, grid.h)]
    if grid.dim == 2:
        columns.append("mach")
        arrays.append(mach_number_ratio(state, fluid, background or (0.0,) * grid.dim).values)
    flat = [a.ravel(order=FLAT_ORDER) for a in arrays]
    write_csv(path, columns, zip(*flat))


def write_eoc(path: Path, rows: Sequence[EocRow]) -> None:
    write_csv(path, OUTPUT_CONFIG["eoc_columns"], ((r.n_cells, r.h, r.err_l2, r.eoc) for r in rows))


def write_summary(path: Path, summary: Dict[str, Any]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        yaml.safe_dump(summary, handle, sort_keys=False, default_flow_style=False)


class SnapshotWriter:
    """Writes field files every ``every`` steps (0: none) and for the final state."""

    def __init__(self, output_dir: Path, fluid: FluidParams, every: int, background: Sequence[float] = ()):
        self.output_dir = output_dir
        self.fluid = fluid
        self.every = every
        self.background = background
        self.written: List[Path] = []
        self._last_step: Optional[int] = None

    def _write(self, step_index: int, state: State):
        path = self.output_dir / OUTPUT_CONFIG["fields_pattern"].format(step=step_index)
        write_fields(path, state, self.fluid, self.background)
        self.written.append(path)
        self._last_step = step_index

    def __call__(self, step_index: int, state: State, outcome: Optional[StepOutcome]):
        if self.every and step_index % self.every == 0:
            self._write(step_index, state)

    def finish(self, step_index: int, state: State):
        if self._last_step != step_index:
            self._write(step_index, state)


@dataclass
class RunReport:
    config: RunConfig
    output_dir: Path
    records: List[Any] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)
    result: Optional[RunResult] = None


def _as_plain(value: Any) -> Any:
    """YAML-safe copy: numpy scalars to floats, tuples to lists."""
    if isinstance(value, dict):
        return {k: _as_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_as_plain(v) for v in value]
    if isinstance(value, (bool, str)) or value is None:
        return value
    if isinstance(value, (int, np.integer)):
        return int(value)
    return float(value)


def build_summary(
    config: RunConfig,
    grid: Grid,
    energy: EnergyRecorder,
    final: State,
    fluid: FluidParams,
    steps: int,
    identities: Optional[IdentityRecorder] = None,
    error: Optional[str] = None,
) -> Dict[str, Any]:
    absolute, relative = energy.max_energy_increase()
    summary: Dict[str, Any] = {
        "problem": config.problem,
        "status": "failed" if error else "completed",
        "epsilon": config.epsilon,
        "cells": list(grid.n_cells),
        "rho0": fluid.rho0,
        "final_time": final.t,
        "steps": steps,
        "min_density": min(r.min_rho for r in energy.records),
        "max_energy_increase": {"absolute": absolute, "relative": relative},
        "lambda_range": list(lambda_range(energy.records)),
        "ap_indicators": ap_indicators(final, fluid),
    }
    if identities is not None:
        summary["identity_residuals"] = identities.maxima.as_dict()
    if error:
        summary["error"] = error
    return _as_plain(summary)


def cmd_run(config: RunConfig, output_dir: Optional[Path] = None) -> RunReport:
    """Run one configuration, writing energies, field snapshots and the summary."""
    out = Path(output_dir) if output_dir is not None else get_output_dir(config.output)
    out.mkdir(parents=True, exist_ok=True)

    grid = config.build_grid()
    initial = config.initial_state(grid)
    fluid = config.fluid_params(initial)
    params = config.scheme_params()
    logger.info(
        f"🚀 Starting {config.problem} run: eps={config.epsilon!r}, cells={grid.n_cells}, "
        f"lambda={params.lambda_mode.value}, t_end={params.t_end!r}"
    )

    energy = EnergyRecorder(fluid)
    snapshots = SnapshotWriter(out, fluid, config.snapshot_every, config.preset.background)
    observers = [energy, snapshots]
    identities = None
    if config.record_identities:
        identities = IdentityRecorder(fluid)
        observers.append(identities)

    report = RunReport(config=config, output_dir=out, records=energy.records)
    last: Dict[str, Any] = {"step": 0, "state": initial}

    def track(step_index: int, state: State, outcome: Optional[StepOutcome]):
        last["step"], last["state"] = step_index, state

    observers.append(track)

    try:
        report.result = run(initial, params, fluid, grid, observers, check_residuals=config.check_residuals)
    except ApflowError as exc:
        logger.error(f"❌ Run failed after {last['step']} steps: {exc}")
        write_energies(out / OUTPUT_CONFIG["energies_file"], energy.records)
        report.summary = build_summary(
            config, grid, energy, last["state"], fluid, last["step"], identities, error=str(exc)
        )
        write_summary(out / OUTPUT_CONFIG["summary_file"], report.summary)
        raise

    result = report.result
    snapshots.finish(result.steps, result.final)
    write_energies(out / OUTPUT_CONFIG["energies_file"], energy.records)
    report.summary = build_summary(config, grid, energy, result.final, fluid, result.steps, identities)
    write_summary(out / OUTPUT_CONFIG["summary_file"], report.summary)

    if identities is not None and identities.maxima.violations:
        logger.warning(
            f"⚠️ lambda-conditions violated in {identities.maxima.violations} steps "
            f"(worst margin {identities.maxima.worst_lambda_margin!r})"
        )
    logger.info(f"✅ {result.steps} steps to t={result.final.t!r}; outputs in {out}")
    logger.info(f"📊 div_u L1 = {report.summary['ap_indicators']['div_u_l1']!r}")
    return report


# Convergence studies

def final_fields(config: RunConfig, nx: int) -> Tuple[Grid, np.ndarray, np.ndarray]:
    """Run ``config`` at resolution ``nx`` and return the final density and velocity."""
    sized = config.with_resolution(nx)
    grid = sized.build_grid()
    initial = sized.initial_state(grid)
    fluid = sized.fluid_params(initial)
    result = run(initial, sized.scheme_params(), fluid, grid)
    logger.info(f"✅ n={nx}: {result.steps} steps")
    return grid, result.final.rho.values, result.final.velocity().components


def _final_fields_job(job: Tuple[RunConfig, int]):
    return final_fields(*job)


@dataclass
class ConvergenceReport:
    rho_rows: List[EocRow]
    u_rows: List[EocRow]
    output_dir: Path


def cmd_converge(
    config: RunConfig,
    n_list: Sequence[int],
    reference_n: int,
    workers: Optional[int] = None,
    output_dir: Optional[Path] = None,
) -> ConvergenceReport:
    """Run the reference and every coarse grid to t_end and tabulate L² errors and EOCs."""
    for n in n_list:
        if n <= 0 or reference_n % n:
            raise NonNestedGrids(f"reference resolution {reference_n} is not a multiple of {n}")
    out = Path(output_dir) if output_dir is not None else get_output_dir(config.output)
    out.mkdir(parents=True, exist_ok=True)
    workers = workers or get_default_workers()

    sizes = [reference_n] + list(n_list)
    jobs = [(config, n) for n in sizes]
    logger.info(f"🚀 Convergence study for {config.problem}: n={list(n_list)}, reference={reference_n}, workers={workers}")
    if workers > 1:
        with multiprocessing.Pool(processes=min(workers, len(jobs))) as pool:
            results = pool.map(_final_fields_job, jobs)
    else:
        results = [_final_fields_job(job) for job in jobs]

    ref_grid, ref_rho, ref_u = results[0]
    reference_rho = ScalarField(ref_grid, ref_rho)
    reference_u = VectorField(ref_grid, ref_u)
    rho_errors, u_errors = [], []
    for n, (grid, rho, u) in zip(n_list, results[1:]):
        rho_errors.append((n, l2_error(ScalarField(grid, rho), reference_rho, restrict)))
        u_errors.append((n, l2_error(VectorField(grid, u), reference_u, restrict)))

    length = config.preset.length[0]
    report = ConvergenceReport(
        rho_rows=eoc_table(rho_errors, length),
        u_rows=eoc_table(u_errors, length),
        output_dir=out,
    )
    write_eoc(out / OUTPUT_CONFIG["eoc_rho_file"], report.rho_rows)
    write_eoc(out / OUTPUT_CONFIG["eoc_u_file"], report.u_rows)
    write_summary(
        out / OUTPUT_CONFIG["summary_file"],
        _as_plain({
            "problem": config.problem,
            "epsilon": config.epsilon,
            "t_end": config.t_end,
            "reference_n": reference_n,
            "eoc_rho": [r.eoc for r in report.rho_rows],
            "eoc_u": [r.eoc for r in report.u_rows],
        }),
    )
    logger.info(f"📊 rho EOC {[r.eoc for r in report.rho_rows]}, u EOC {[r.eoc for r in report.u_rows]}")
    return report

"""Experiment orchestration: single runs, parameter sweeps and the per-module tables."""

import dataclasses
import logging
from collections.abc import Callable
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Any

import numpy as np
from tqdm import tqdm

from clock_engine.accounting import (
    CycleLedger,
    sample_selective_cycles,
    selective_cycle_average,
    unselective_cycle_average,
)
from clock_engine.config import EngineConfig
from clock_engine.engine_core import ThermModel
from clock_engine.mixed_fuel import mixed_cycle_stats
from clock_engine.spin_algebra import MachineSpec, build_spin_machine
from clock_engine.therm_models import run_subunit_cycle
from clock_engine.utils import add_normalised
from clock_engine.zeno import zeno_total_work

logger = logging.getLogger(__name__)

Row = dict[str, Any]


@dataclass
class SweepResult:
    """Rows that evaluated, in task order, and the tasks that raised."""

    rows: list[Row] = field(default_factory=list)
    failures: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def _machine(config: EngineConfig) -> MachineSpec:
    return build_spin_machine(config.l, tau_tilde=config.tau_tilde, tau_prime=config.tau_prime)


def therm_model_for(config: EngineConfig) -> ThermModel:
    """ThermModel named by ``config.therm_model``.

    ``instant`` resets the qubit once per unit protocol, so any ``n_beta``
    other than 1 is ignored with a warning.
    """
    if config.therm_model == "subunit":
        return ThermModel.subunit(config.n_beta)
    if config.therm_model == "bosonic":
        return ThermModel.bosonic(config.n_beta, config.tau_beta, config.printed_coefficients)
    if config.n_beta != 1:
        logger.warning(
            "n_beta=%d is ignored by the instant model; use therm_model='subunit' "
            "for %d resets per unit protocol",
            config.n_beta,
            config.n_beta,
        )
    return ThermModel.instant()


def run_single(config: EngineConfig) -> Row:
    """Evaluate one engine configuration into a result row.

    Energies are in units of the energy scale of the Hamiltonians; every
    energy column also has a ``_norm`` twin in units of kT log 2.
    """
    spec = _machine(config)
    w_zeno = zeno_total_work(spec, config.beta)
    if config.mode == "zeno":
        ledger = CycleLedger(
            mode="zeno",
            energy_to_apparatus=w_zeno,
            reset_cost=0.0,
            heat_in=w_zeno,
            w_ideal=w_zeno,
        )
    elif config.mode == "unselective":
        ledger = unselective_cycle_average(spec, config.beta, config.dt, therm_model_for(config))
    else:
        ledger = selective_cycle_average(
            spec, config.beta, config.dt, therm_model_for(config), config.flip_convention
        )
    row = {
        "l": config.l,
        "dt": config.dt,
        "n_steps": ledger.n_steps,
        "beta": config.beta,
        "mode": config.mode,
        "therm_model": config.therm_model,
        "w_ideal": ledger.w_ideal,
        "w_avg": ledger.net_work,
        "w_zeno": w_zeno,
        "reset_cost": ledger.reset_cost,
        "heat_in": ledger.heat_in,
    }
    return add_normalised(
        row, ("w_ideal", "w_avg", "w_zeno", "reset_cost", "heat_in"), config.beta
    )


def run_therm_row(config: EngineConfig) -> Row:
    """Selective instant-vs-finite thermalisation comparison for one configuration.

    ``instant`` and ``subunit`` both run the sub-unit model with
    ``n_beta`` Gibbs resets; ``bosonic`` uses finite-time equilibration.
    """
    spec = _machine(config)
    tau_beta = config.tau_beta if config.therm_model == "bosonic" else None
    ledger = run_subunit_cycle(
        spec,
        config.beta,
        config.dt,
        config.n_beta,
        tau_beta,
        config.printed_coefficients,
        config.flip_convention,
    )
    row = {
        "l": config.l,
        "dt": config.dt,
        "beta": config.beta,
        "therm_model": config.therm_model,
        "n_beta": config.n_beta,
        "tau_beta": config.tau_beta if tau_beta is not None else float("inf"),
        "w_ideal": ledger.w_ideal,
        "w_avg": ledger.net_work,
    }
    return add_normalised(row, ("w_ideal", "w_avg"), config.beta)


def run_mixed_fuel_row(config: EngineConfig) -> Row:
    """Mixed-fuel statistics for input mixedness ``config.q``."""
    spec = None if config.classical_limit else _machine(config)
    report = mixed_cycle_stats(
        spec,
        config.beta,
        config.dt,
        config.q,
        classical_limit=config.classical_limit,
        flip_convention=config.flip_convention,
    )
    row = {
        "q": config.q,
        "l": config.l,
        "dt": config.dt,
        "beta": config.beta,
        "classical_limit": config.classical_limit,
        "p_fail_first": report.p_fail_first,
        "p_fail_rest": report.p_fail_rest,
        "p_out_pure": report.p_out_pure,
        "p_out_mixed": report.p_out_mixed,
        "q_star": report.q_star,
        "energy_to_apparatus": report.energy_to_apparatus,
        "reset_cost": report.reset_cost,
        "net_work": report.net_work,
    }
    return add_normalised(row, ("net_work",), config.beta)


def run_sample_row(config: EngineConfig) -> Row:
    """Seeded Monte Carlo of selective cycles next to the exact average."""
    spec = _machine(config)
    works = sample_selective_cycles(
        spec, config.beta, config.dt, config.n_samples, config.seed, config.flip_convention
    )
    exact = selective_cycle_average(
        spec, config.beta, config.dt, flip_convention=config.flip_convention
    )
    return {
        "l": config.l,
        "dt": config.dt,
        "beta": config.beta,
        "n_samples": config.n_samples,
        "seed": config.seed,
        "w_sampled_mean": float(np.mean(works)),
        "w_sampled_std": float(np.std(works)),
        "w_avg": exact.net_work,
    }


def run_zeno_row(config: EngineConfig) -> Row:
    """Closed-form Zeno work over the configured harvesting window."""
    row = {
        "l": config.l,
        "beta": config.beta,
        "w_zeno": zeno_total_work(_machine(config), config.beta),
    }
    return add_normalised(row, ("w_zeno",), config.beta)


def _describe(config: EngineConfig) -> str:
    return f"l={config.l:g}, dt={config.dt:g}"


def _guarded(evaluate: Callable[[EngineConfig], Row], config: EngineConfig) -> tuple[Row | None, str | None]:
    """Evaluate one task, turning an exception into an error message."""
    try:
        return evaluate(config), None
    except Exception as err:
        return None, f"{type(err).__name__}: {err}"


class ExperimentRunner:
    """Runs the tables of one subcommand for a resolved configuration.

    Tasks are independent; with ``workers > 1`` they run in a process pool
    whose ``map`` keeps the task order, so the output does not depend on
    the number of workers.

    Args:
        config: Resolved configuration.
        progress: Show a tqdm progress bar over tasks.
    """

    def __init__(self, config: EngineConfig, progress: bool = True) -> None:
        self.config = config
        self.progress = progress

    def _tasks(self, **grids: tuple) -> list[EngineConfig]:
        """Cross product of the given grids, first grid outermost."""
        tasks = [self.config]
        for name, values in grids.items():
            tasks = [dataclasses.replace(t, **{name: v}) for t in tasks for v in values]
        return tasks

    def _evaluate(
        self, evaluate: Callable[[EngineConfig], Row], tasks: list[EngineConfig], desc: str
    ) -> SweepResult:
        logger.info("Evaluating %d %s task(s) with %d worker(s)", len(tasks), desc, self.config.workers)
        guarded = partial(_guarded, evaluate)
        result = SweepResult()
        bar = tqdm(total=len(tasks), desc=desc, disable=not self.progress)
        if self.config.workers > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=self.config.workers) as pool:
                outcomes = self._collect(pool.map(guarded, tasks), bar)
        else:
            outcomes = self._collect(map(guarded, tasks), bar)
        bar.close()
        for task, (row, error) in zip(tasks, outcomes):
            if error is None:
                result.rows.append(row)
            else:
                logger.warning("Row %s failed: %s", _describe(task), error)
                result.failures.append((_describe(task), error))
        logger.info("%s: %d row(s), %d failure(s)", desc, len(result.rows), len(result.failures))
        return result

    @staticmethod
    def _collect(outcomes, bar) -> list[tuple[Row | None, str | None]]:
        collected = []
        for outcome in outcomes:
            collected.append(outcome)
            bar.update(1)
        return collected

    def run_single(self) -> SweepResult:
        """The scalar configuration as a one-row table."""
        return self._evaluate(run_single, [self.config], "run")

    def run_sweep(self) -> SweepResult:
        """Cross product of l and dt, l-major."""
        tasks = self._tasks(l=self.config.l_grid, dt=self.config.dt_grid)
        return self._evaluate(run_single, tasks, "sweep")

    def run_zeno(self) -> SweepResult:
        return self._evaluate(run_zeno_row, self._tasks(l=self.config.l_grid), "zeno")

    def run_therm(self) -> SweepResult:
        """Cross product of l, dt, n_beta and tau_beta."""
        tasks = self._tasks(
            l=self.config.l_grid,
            dt=self.config.dt_grid,
            n_beta=self.config.n_beta_grid,
            tau_beta=self.config.tau_beta_grid,
        )
        return self._evaluate(run_therm_row, tasks, "therm")

    def run_mixed_fuel(self) -> SweepResult:
        """Cross product of q, l and dt; in the classical limit only q varies."""
        if self.config.classical_limit:
            tasks = self._tasks(q=self.config.q_grid)
        else:
            tasks = self._tasks(q=self.config.q_grid, l=self.config.l_grid, dt=self.config.dt_grid)
        return self._evaluate(run_mixed_fuel_row, tasks, "mixed-fuel")

    def run_sample(self) -> SweepResult:
        tasks = self._tasks(l=self.config.l_grid, dt=self.config.dt_grid)
        return self._evaluate(run_sample_row, tasks, "sample")


def run_sweep(config: EngineConfig, progress: bool = False) -> SweepResult:
    """Evaluate the (l, dt) cross product of ``config``; see ExperimentRunner.run_sweep."""
    return ExperimentRunner(config, progress=progress).run_sweep()

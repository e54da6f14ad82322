"""Running the engine on partially mixed qubit input q/2 * 1 + (1 - q) |psi><psi|."""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect
from scipy.stats import entropy

from clock_engine.accounting import (
    flip_energy,
    landauer_reset,
    selective_cycle_average,
    success_probability,
)
from clock_engine.engine_core import BlockState, clock_measurement, transition_matrix
from clock_engine.spin_algebra import MachineSpec, clock_frame, evolve_vectors

logger = logging.getLogger(__name__)

BREAKEVEN_XTOL = 1e-10


@dataclass(frozen=True)
class MixedFuelReport:
    """One cycle of the engine fed with mixedness ``q``.

    ``p_fail_first`` is the failure probability of the stabilising
    measurement at tau_tilde, ``p_fail_rest`` that of the remaining cycle.
    The engine outputs a pure qubit with probability ``p_out_pure``.
    """

    q: float
    p_fail_first: float
    p_fail_rest: float
    p_out_pure: float
    p_out_mixed: float
    q_star: float
    energy_to_apparatus: float
    reset_cost: float
    classical_limit: bool = False

    @property
    def net_work(self) -> float:
        return self.energy_to_apparatus - self.reset_cost

    @property
    def output_mixedness(self) -> float:
        return self.p_out_mixed


def _check_q(q: float) -> None:
    if not 0 <= q <= 1:
        raise ValueError(f"Input mixedness q must lie in [0, 1], got {q}.")


def _binary_entropy(x: float) -> float:
    return float(entropy([x, 1 - x]))


def _stabilising_success(spec: MachineSpec, tau_tilde: float) -> float:
    return transition_matrix(spec, 0.0, tau_tilde).success


def first_measurement_failure(
    spec: MachineSpec, q: float, tau_tilde: float | None = None
) -> float:
    """P1 = (q/2)(1 - Gamma_dd(0, tau_tilde)) for the stabilising measurement.

    Raises:
        ValueError: If ``q`` is outside [0, 1].
    """
    _check_q(q)
    tau = spec.tau_tilde if tau_tilde is None else tau_tilde
    return (q / 2) * (1 - _stabilising_success(spec, tau))


def stationary_fixed_point(alpha: float, p_success: float) -> float:
    """Solve q* = (1 - alpha q*/2) P for q*."""
    return p_success / (1 + alpha * p_success / 2)


def stationary_mixedness(spec: MachineSpec, beta: float, dt: float) -> float:
    """Mixedness of the engine's own output when it is fed that output."""
    alpha = 1 - _stabilising_success(spec, spec.tau_tilde)
    return stationary_fixed_point(alpha, success_probability(spec, beta, dt))


def classical_stationary_mixedness() -> float:
    """Fixed point for an infinitely large clock in the Zeno limit: 2/3."""
    return stationary_fixed_point(1.0, 1.0)


def breakeven_mixedness() -> float:
    """Mixedness q' above which the classical-limit engine yields negative net work."""

    def surplus(q: float) -> float:
        return (1 - q / 2) * math.log(2) - _binary_entropy(q / 2)

    return float(bisect(surplus, 0.0, 1.0, xtol=BREAKEVEN_XTOL))


def _mixed_input_state(spec: MachineSpec, q: float) -> BlockState:
    """Joint state at tau_tilde for input mixedness q and clock started on |d>."""
    top = spec.c_basis[:, -1]
    on_orbit = clock_frame(spec, spec.tau_tilde)[:, -1]
    off_orbit = evolve_vectors(spec, "plus", spec.tau_tilde, top)
    return BlockState(
        (1 - q / 2) * np.outer(on_orbit, on_orbit.conj()),
        (q / 2) * np.outer(off_orbit, off_orbit.conj()),
    )


def mixed_cycle_stats(
    spec: MachineSpec | None,
    beta: float,
    dt: float,
    q: float,
    classical_limit: bool = False,
    flip_convention: str = "printed",
) -> MixedFuelReport:
    """Failure probabilities, output state and net work for input mixedness ``q``.

    In the classical limit (infinite clock, Zeno stabilisation) each
    success hands kT log 2 to the apparatus, the stabilising measurement
    fails with probability q/2 and the rest of the cycle never fails;
    ``spec`` and ``dt`` are then unused. Otherwise the stabilising
    measurement is simulated and a selective instant-Gibbs cycle follows a
    success.
    """
    _check_q(q)
    if classical_limit:
        kt = 1 / beta
        p_fail_first = q / 2
        return MixedFuelReport(
            q=q,
            p_fail_first=p_fail_first,
            p_fail_rest=0.0,
            p_out_pure=p_fail_first,
            p_out_mixed=1 - p_fail_first,
            q_star=classical_stationary_mixedness(),
            energy_to_apparatus=(1 - q / 2) * kt * math.log(2),
            reset_cost=kt * _binary_entropy(q / 2),
            classical_limit=True,
        )
    if spec is None:
        raise ValueError("A machine specification is required outside the classical limit.")

    records = clock_measurement(spec, _mixed_input_state(spec, q), spec.tau_tilde)
    probabilities = np.array([r.probability for r in records])
    initial_energy = sum(
        r.probability
        * (r.energy_to_apparatus + (flip_energy(spec, r.post_state, flip_convention) if r.is_misfire else 0.0))
        for r in records
    )
    initial_reset = landauer_reset(probabilities / probabilities.sum(), beta)

    ledger = selective_cycle_average(spec, beta, dt, flip_convention=flip_convention)
    p_fail_first = first_measurement_failure(spec, q)
    p_fail_rest = 1 - ledger.success_probability
    p_continue = 1 - p_fail_first
    alpha = 1 - _stabilising_success(spec, spec.tau_tilde)
    logger.debug("Mixed fuel q=%.6g: P1=%.6g, P2=%.6g", q, p_fail_first, p_fail_rest)
    return MixedFuelReport(
        q=q,
        p_fail_first=p_fail_first,
        p_fail_rest=p_fail_rest,
        p_out_pure=p_fail_first + p_continue * p_fail_rest,
        p_out_mixed=p_continue * (1 - p_fail_rest),
        q_star=stationary_fixed_point(alpha, ledger.success_probability),
        energy_to_apparatus=float(initial_energy + p_continue * ledger.energy_to_apparatus),
        reset_cost=float(initial_reset + p_continue * ledger.reset_cost),
        classical_limit=False,
    )

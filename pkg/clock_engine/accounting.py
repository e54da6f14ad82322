"""Energy bookkeeping: work to the apparatus, feedback flips, Landauer reset and heat.

Energies are in the units of the machine Hamiltonians and entropies use the
natural logarithm, so ``reset_cost`` is ``S / beta``.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import entropy

from clock_engine.engine_core import (
    BlockState,
    ThermalQubit,
    ThermModel,
    run_unit_protocol,
)
from clock_engine.spin_algebra import MachineSpec, clock_frame, evolve_vectors

logger = logging.getLogger(__name__)

FLIP_CONVENTIONS = ("printed", "conserving")
MODES = ("selective", "unselective")
PROBABILITY_TOL = 1e-9


@dataclass(frozen=True)
class CycleLedger:
    """Cycle-averaged energy flows of one engine mode.

    Attributes:
        mode: ``"selective"`` or ``"unselective"``.
        energy_to_apparatus: Expected energy handed to the apparatus.
        reset_cost: Expected Landauer cost of erasing the records.
        heat_in: Expected heat drawn from the bath.
        w_ideal: Single-shot work of the trajectory that never misfires.
        success_probability: Probability of that trajectory.
        n_steps: Number of unit protocols in the cycle.
        dt: Unit protocol duration actually used.
    """

    mode: str
    energy_to_apparatus: float
    reset_cost: float
    heat_in: float
    w_ideal: float
    success_probability: float = 1.0
    n_steps: int = 0
    dt: float = 0.0

    @property
    def net_work(self) -> float:
        return self.energy_to_apparatus - self.reset_cost


@dataclass(frozen=True)
class MisfireEnergy:
    """Energy to the apparatus for a misfire, split into measurement and flip parts."""

    measurement: float
    flip: float

    @property
    def total(self) -> float:
        return self.measurement + self.flip


@dataclass(frozen=True)
class HeatFlow:
    """Heat drawn by the thermalisation at ``t + dt`` after a successful unit protocol."""

    quantum: float
    classical: float


@dataclass(frozen=True, eq=False)
class UnitStep:
    """Outcome statistics of one unit protocol on the success branch.

    ``misfire_energies`` already include the feedback flip.
    """

    t: float
    success_probability: float
    success_energy: float
    misfire_probabilities: np.ndarray
    misfire_energies: np.ndarray
    reset_cost: float
    heat_before: float


@dataclass(frozen=True, eq=False)
class _StepGeometry:
    gamma: np.ndarray
    plus_now: float
    minus_now: float
    plus_next: np.ndarray
    minus_next: np.ndarray


def _check_convention(flip_convention: str) -> None:
    if flip_convention not in FLIP_CONVENTIONS:
        raise ValueError(
            f"Unknown flip convention {flip_convention!r}; expected one of {FLIP_CONVENTIONS}."
        )


def _check_p1(p1: float) -> None:
    if not 0 <= p1 <= 1:
        raise ValueError(f"Excited population p1 must lie in [0, 1], got {p1}.")


def _reference_vector(spec: MachineSpec, t: float) -> np.ndarray:
    return evolve_vectors(spec, "minus", t, spec.c_basis[:, -1])


def _expectation(vector: np.ndarray, operator: np.ndarray) -> float:
    return float(np.real(vector.conj() @ operator @ vector))


def _step_geometry(spec: MachineSpec, t: float, dt: float) -> _StepGeometry:
    """Gamma column out of the reference orbit plus the orbit energies it needs."""
    reference = _reference_vector(spec, t)
    frame_next = clock_frame(spec, t + dt)
    amplitudes = frame_next.conj().T @ evolve_vectors(spec, "plus", dt, reference)
    return _StepGeometry(
        gamma=np.abs(amplitudes) ** 2,
        plus_now=_expectation(reference, spec.h_plus),
        minus_now=_expectation(reference, spec.h_minus),
        plus_next=np.real(np.einsum("im,ij,jm->m", frame_next.conj(), spec.h_plus, frame_next)),
        minus_next=np.real(np.einsum("im,ij,jm->m", frame_next.conj(), spec.h_minus, frame_next)),
    )


def cycle_grid(spec: MachineSpec, dt: float) -> tuple[int, float]:
    """Number of unit protocols and the step that lands exactly on ``tau_prime``.

    Raises:
        ValueError: If ``dt`` is not positive or exceeds the harvesting window.
    """
    window = spec.tau_prime - spec.tau_tilde
    if not dt > 0:
        raise ValueError(f"Unit protocol duration dt must be > 0, got {dt}.")
    if dt > window * (1 + 1e-12):
        raise ValueError(
            f"dt={dt} exceeds the harvesting window tau_prime - tau_tilde = {window}."
        )
    n_steps = max(1, round(window / dt))
    return n_steps, window / n_steps


def success_energy(spec: MachineSpec, t: float, dt: float, p1: float) -> float:
    """Energy to the apparatus for outcome d of a unit protocol starting at ``t``.

    dE_d = p1 (<d(t)|H+|d(t)> - (Gamma_dd / p_d) <d(t+dt)|H+|d(t+dt)>),
    with p_d = p0 + p1 Gamma_dd.
    """
    _check_p1(p1)
    if p1 == 0:
        return 0.0
    geometry = _step_geometry(spec, t, dt)
    gamma_dd = geometry.gamma[-1]
    p_d = (1 - p1) + p1 * gamma_dd
    return p1 * (geometry.plus_now - (gamma_dd / p_d) * geometry.plus_next[-1])


def misfire_energy(
    spec: MachineSpec,
    t: float,
    dt: float,
    p1: float,
    m: int,
    flip_convention: str = "printed",
) -> MisfireEnergy:
    """Energy to the apparatus for a misfire onto orbit ``m`` (1..d-1).

    The measurement part is ``p1 <d(t)|H+|d(t)> - <m(t+dt)|H+|m(t+dt)>``.
    The ``"printed"`` flip charges ``-<m(t+dt)|H+|m(t+dt)>``; the
    ``"conserving"`` flip credits the energy the psi-bar -> psi flip
    releases, ``<m|H+|m> - <m|H-|m>``.

    Raises:
        ValueError: If ``m`` is the reference orbit or out of range.
    """
    _check_p1(p1)
    _check_convention(flip_convention)
    if m == spec.d:
        raise ValueError(f"m={m} is the reference orbit, not a misfire.")
    if not 1 <= m < spec.d:
        raise ValueError(f"Orbit index m={m} is outside 1..{spec.d - 1}.")
    geometry = _step_geometry(spec, t, dt)
    plus_m = geometry.plus_next[m - 1]
    measurement = p1 * geometry.plus_now - plus_m
    if flip_convention == "printed":
        flip = -plus_m
    else:
        flip = plus_m - geometry.minus_next[m - 1]
    return MisfireEnergy(measurement=float(measurement), flip=float(flip))


def flip_energy(spec: MachineSpec, post_state: BlockState, flip_convention: str = "printed") -> float:
    """Energy to the apparatus of the feedback flip psi <-> psi-bar after a misfire.

    The flip swaps both blocks. ``"printed"`` charges the energy of the
    misfired state, ``-(tr[H+ B] + tr[H- A])``; ``"conserving"`` credits
    what the swap releases, ``tr[(H+ - H-) B] - tr[(H+ - H-) A]``. After an
    instant-Gibbs misfire ``A`` is zero and both reduce to the per-orbit
    forms of ``misfire_energy``.
    """
    _check_convention(flip_convention)
    bar_plus = float(np.real(np.trace(spec.h_plus @ post_state.block_psibar)))
    psi_minus = float(np.real(np.trace(spec.h_minus @ post_state.block_psi)))
    if flip_convention == "printed":
        return -(bar_plus + psi_minus)
    bar_minus = float(np.real(np.trace(spec.h_minus @ post_state.block_psibar)))
    psi_plus = float(np.real(np.trace(spec.h_plus @ post_state.block_psi)))
    return (bar_plus - bar_minus) - (psi_plus - psi_minus)


def landauer_reset(probabilities: np.ndarray, beta: float) -> float:
    """Minimal cost ``S(p) / beta`` of erasing a record with distribution ``p``.

    Raises:
        ValueError: If a probability is negative or they do not sum to 1.
    """
    p = np.asarray(probabilities, dtype=float)
    if np.any(p < 0):
        raise ValueError(f"Probabilities must be non-negative, got minimum {p.min():.3e}.")
    total = p.sum()
    if abs(total - 1) > PROBABILITY_TOL:
        raise ValueError(f"Probabilities sum to {total:.12g}, expected 1.")
    if math.isinf(beta):
        return 0.0
    if not beta > 0:
        raise ValueError(f"Inverse temperature beta must be > 0, got {beta}.")
    return float(entropy(p)) / beta


def heat_flow(spec: MachineSpec, t: float, dt: float, beta: float) -> HeatFlow:
    """Heat of the thermalisation at ``t + dt`` following outcome d.

    quantum = (p1(t+dt) - p1(t) Gamma_dd / p_d) Delta(t+dt); the classical
    reference drops the Gamma_dd / p_d factor.
    """
    geometry = _step_geometry(spec, t, dt)
    now = ThermalQubit.at(geometry.plus_now, beta)
    delta_next = geometry.plus_next[-1]
    following = ThermalQubit.at(delta_next, beta)
    gamma_dd = geometry.gamma[-1]
    ratio = gamma_dd / (now.p0 + now.p1 * gamma_dd)
    return HeatFlow(
        quantum=float((following.p1 - now.p1 * ratio) * delta_next),
        classical=float((following.p1 - now.p1) * delta_next),
    )


def selective_success_profile(spec: MachineSpec, beta: float, dt: float) -> np.ndarray:
    """Per-unit-protocol success probabilities p_d along the reference orbit."""
    n_steps, step = cycle_grid(spec, dt)
    values, basis = spec.eig_plus
    plus_phases = np.exp(-1j * values * step)
    profile = np.empty(n_steps)
    reference = _reference_vector(spec, spec.tau_tilde)
    for k in range(n_steps):
        t = spec.tau_tilde + k * step
        following = _reference_vector(spec, t + step)
        evolved = basis @ (plus_phases * (basis.conj().T @ reference))
        gamma_dd = abs(np.vdot(following, evolved)) ** 2
        qubit = ThermalQubit.at(_expectation(reference, spec.h_plus), beta)
        profile[k] = qubit.p0 + qubit.p1 * gamma_dd
        reference = following
    return profile


def success_probability(spec: MachineSpec, beta: float, dt: float) -> float:
    """Probability that a selective cycle never misfires."""
    return float(np.prod(selective_success_profile(spec, beta, dt)))


def closed_form_steps(
    spec: MachineSpec, beta: float, dt: float, flip_convention: str = "printed"
) -> list[UnitStep]:
    """Unit-protocol statistics of the instant-Gibbs selective engine."""
    _check_convention(flip_convention)
    n_steps, step = cycle_grid(spec, dt)
    steps = []
    previous_bar_weight = 0.0
    for k in range(n_steps):
        t = spec.tau_tilde + k * step
        geometry = _step_geometry(spec, t, step)
        qubit = ThermalQubit.at(geometry.plus_now, beta)
        gamma_dd = geometry.gamma[-1]
        p_d = qubit.p0 + qubit.p1 * gamma_dd
        misfire_p = qubit.p1 * geometry.gamma[:-1]

        bar_weight = qubit.p1 * gamma_dd / p_d
        after = qubit.p0 / p_d * geometry.minus_next[-1] + bar_weight * geometry.plus_next[-1]
        before = qubit.p0 * geometry.minus_now + qubit.p1 * geometry.plus_now
        measurement = before - geometry.plus_next[:-1]
        if flip_convention == "printed":
            flips = -geometry.plus_next[:-1]
        else:
            flips = geometry.plus_next[:-1] - geometry.minus_next[:-1]

        steps.append(
            UnitStep(
                t=t,
                success_probability=float(p_d),
                success_energy=float(before - after),
                misfire_probabilities=misfire_p,
                misfire_energies=measurement + flips,
                reset_cost=landauer_reset(_distribution(p_d, misfire_p), beta),
                heat_before=float(
                    (qubit.p1 - previous_bar_weight) * (geometry.plus_now - geometry.minus_now)
                ),
            )
        )
        previous_bar_weight = bar_weight
    logger.debug("Closed-form selective steps: N=%d, dt=%.6g", n_steps, step)
    return steps


def _distribution(p_d: float, misfire_p: np.ndarray) -> np.ndarray:
    # rounding can leave the misfire tail a few ulps below zero
    p = np.append(np.clip(misfire_p, 0.0, None), p_d)
    return p / p.sum()


def _three_term_average(
    p_d: np.ndarray, success_values: np.ndarray, misfire_values: np.ndarray
) -> float:
    """Average a per-step quantity over selective cycles.

    The terms are: the all-success trajectory, trajectories that abort at
    step k (keeping what steps < k produced) and the misfire step itself.
    ``misfire_values[k]`` is the probability-weighted misfire value at k.
    """
    prefix = np.concatenate(([1.0], np.cumprod(p_d)))
    earlier = np.concatenate(([0.0], np.cumsum(success_values)[:-1]))
    all_success = prefix[-1] * success_values.sum()
    aborted = np.sum(prefix[:-1] * (1 - p_d) * earlier)
    misfired = np.sum(prefix[:-1] * misfire_values)
    return float(all_success + aborted + misfired)


def assemble_selective_ledger(steps: list[UnitStep], step: float) -> CycleLedger:
    """Selective cycle ledger from the unit protocols of the success branch."""
    p_d = np.array([s.success_probability for s in steps])
    success_energies = np.array([s.success_energy for s in steps])
    resets = np.array([s.reset_cost for s in steps])
    misfire_energies = np.array(
        [float(np.dot(s.misfire_probabilities, s.misfire_energies)) for s in steps]
    )
    prefix = np.concatenate(([1.0], np.cumprod(p_d)))
    return CycleLedger(
        mode="selective",
        energy_to_apparatus=_three_term_average(p_d, success_energies, misfire_energies),
        reset_cost=_three_term_average(p_d, resets, (1 - p_d) * resets),
        heat_in=float(np.sum(prefix[:-1] * [s.heat_before for s in steps])),
        w_ideal=float(np.sum(success_energies - resets)),
        success_probability=float(prefix[-1]),
        n_steps=len(steps),
        dt=step,
    )


def selective_cycle_average(
    spec: MachineSpec,
    beta: float,
    dt: float,
    therm_model: ThermModel | None = None,
    flip_convention: str = "printed",
) -> CycleLedger:
    """Exact expected work of the selective (abort-on-misfire) engine."""
    model = therm_model or ThermModel.instant()
    _, step = cycle_grid(spec, dt)
    if model.kind == "instant":
        steps = closed_form_steps(spec, beta, dt, flip_convention)
    else:
        from clock_engine.therm_models import simulate_selective_steps

        steps = simulate_selective_steps(spec, beta, dt, model, flip_convention)
    return assemble_selective_ledger(steps, step)


def unselective_cycle_average(
    spec: MachineSpec,
    beta: float,
    dt: float,
    therm_model: ThermModel | None = None,
) -> CycleLedger:
    """Exact expected work of the unselective engine by forward dynamic programming.

    The chain state is the clock orbit. Each unit protocol starts with a
    full thermalisation, which makes the orbit sequence Markov; the
    trajectory entropy then follows from the chain rule.

    Raises:
        ValueError: For the bosonic model, whose partial thermalisation
            carries qubit memory between unit protocols.
    """
    model = therm_model or ThermModel.instant()
    if model.kind == "bosonic":
        raise ValueError(
            "Unselective averaging needs a model that resets the qubit at the start "
            "of every unit protocol; the bosonic model does not."
        )
    n_steps, step = cycle_grid(spec, dt)
    d = spec.d
    occupation = np.zeros(d)
    occupation[-1] = 1.0
    bar_weight = np.zeros(d)
    energy = trajectory_entropy = heat = w_ideal = 0.0
    stay_probability = 1.0

    for k in range(n_steps):
        t = spec.tau_tilde + k * step
        frame = clock_frame(spec, t)
        plus_now = np.real(np.einsum("im,ij,jm->m", frame.conj(), spec.h_plus, frame))
        minus_now = np.real(np.einsum("im,ij,jm->m", frame.conj(), spec.h_minus, frame))
        next_occupation = np.zeros(d)
        next_bar_weight = np.zeros(d)

        for m in np.flatnonzero(occupation > 0):
            start = BlockState.from_clock_vector(frame[:, m])
            records, pre = run_unit_protocol(spec, start, t, step, beta, model)
            probabilities = np.array([r.probability for r in records])
            energies = np.array([r.energy_to_apparatus for r in records])
            row_entropy = float(entropy(probabilities))
            weight = occupation[m]

            # qubit populations entering this unit protocol on orbit m
            enter_energy = (weight - bar_weight[m]) * minus_now[m] + bar_weight[m] * plus_now[m]
            heat += weight * pre.energy(spec) - enter_energy
            energy += weight * float(np.dot(probabilities, energies))
            trajectory_entropy += weight * row_entropy
            for record in records:
                next_occupation[record.m - 1] += weight * record.probability
                next_bar_weight[record.m - 1] += (
                    weight * record.probability * record.post_state.weight_psibar
                )
            if m == d - 1:
                stay = next((r for r in records if r.m == d), None)
                p_stay = stay.probability if stay is not None else 0.0
                stay_probability *= p_stay
                w_ideal += (stay.energy_to_apparatus if stay is not None else 0.0) - (
                    row_entropy / beta if math.isfinite(beta) else 0.0
                )

        occupation = next_occupation / next_occupation.sum()
        bar_weight = next_bar_weight / next_occupation.sum()

    reset = trajectory_entropy / beta if math.isfinite(beta) else 0.0
    logger.debug(
        "Unselective cycle: N=%d, dt=%.6g, trajectory entropy=%.6g",
        n_steps,
        step,
        trajectory_entropy,
    )
    return CycleLedger(
        mode="unselective",
        energy_to_apparatus=energy,
        reset_cost=reset,
        heat_in=heat,
        w_ideal=w_ideal,
        success_probability=stay_probability,
        n_steps=n_steps,
        dt=step,
    )


def sample_selective_cycles(
    spec: MachineSpec,
    beta: float,
    dt: float,
    n_cycles: int,
    seed: int | None = None,
    flip_convention: str = "printed",
) -> np.ndarray:
    """Monte Carlo work of ``n_cycles`` selective cycles (instant-Gibbs model).

    Each sampled cycle runs until its first misfire or the end of the
    window and returns its single-shot work.
    """
    if n_cycles < 1:
        raise ValueError(f"n_cycles must be >= 1, got {n_cycles}.")
    steps = closed_form_steps(spec, beta, dt, flip_convention)
    rng = np.random.default_rng(seed)
    works = np.zeros(n_cycles)
    for i in range(n_cycles):
        for s in steps:
            if rng.random() < s.success_probability:
                works[i] += s.success_energy - s.reset_cost
                continue
            misfire_p = s.misfire_probabilities / s.misfire_probabilities.sum()
            m = rng.choice(len(misfire_p), p=misfire_p)
            works[i] += s.misfire_energies[m] - s.reset_cost
            break
    return works


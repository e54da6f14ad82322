"""Sub-unit thermalisation and finite-time equilibration with a resonant bosonic bath."""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from clock_engine.accounting import (
    CycleLedger,
    UnitStep,
    assemble_selective_ledger,
    cycle_grid,
    flip_energy,
    landauer_reset,
)
from clock_engine.engine_core import (
    BlockState,
    ThermalQubit,
    ThermModel,
    conditional_evolve,
    gibbs_thermalize,
    reference_state,
    run_unit_protocol,
)
from clock_engine.spin_algebra import MachineSpec

logger = logging.getLogger(__name__)

DEGENERACY_GUARD = 1e-8


@dataclass(frozen=True)
class BosonicCoefficients:
    """Population transfer coefficients of a finite-time bosonic equilibration.

    ``c_x_to_y`` is the fraction of the population of level x found in
    level y afterwards.
    """

    n_bar: float
    tau_beta: float
    c_psi_stay: float
    c_bar_to_psi: float
    c_psi_to_bar: float
    c_bar_stay: float


def bosonic_coefficients(
    delta: float, beta: float, tau_beta: float, printed: bool = False
) -> BosonicCoefficients:
    """Two-level relaxation towards the Gibbs state over an effective time ``tau_beta``.

    The bath mode is resonant with the splitting, so n_bar = 1/(e^{beta|delta|} - 1)
    and populations relax with rate (2 n_bar + 1). A negative splitting
    swaps the roles of the two levels. With ``printed=True`` the psi -> psi-bar
    coefficient takes the form -e^{-(2n+1)tau}(n - 1)/(2n + 1), which does not
    preserve the trace; it is kept for comparison runs only.

    Raises:
        ValueError: If ``tau_beta`` is negative.
    """
    if not tau_beta >= 0:
        raise ValueError(f"tau_beta must be >= 0, got {tau_beta}.")
    x = beta * abs(delta) if delta != 0 else 0.0
    n_bar = 1.0 / math.expm1(x) if 0 < x < 700 else (math.inf if x == 0 else 0.0)
    if tau_beta == 0:
        rate = 0.0
    elif x < DEGENERACY_GUARD:
        # (2n+1) diverges as 2/x; any positive tau equilibrates completely
        rate = math.inf
        logger.debug("Near-degenerate splitting %.3g: full equilibration", delta)
    else:
        rate = tau_beta / math.tanh(x / 2)
    decay = math.exp(-rate)

    gibbs = ThermalQubit.at(delta, beta)
    c_psi_to_bar = gibbs.p1 * (1 - decay)
    c_bar_to_psi = gibbs.p0 * (1 - decay)
    c_psi_stay = 1 - c_psi_to_bar
    c_bar_stay = 1 - c_bar_to_psi
    if printed:
        c_psi_to_bar = -decay * (float(expit(-x)) - math.tanh(x / 2))
    return BosonicCoefficients(
        n_bar=n_bar,
        tau_beta=float(tau_beta),
        c_psi_stay=c_psi_stay,
        c_bar_to_psi=c_bar_to_psi,
        c_psi_to_bar=c_psi_to_bar,
        c_bar_stay=c_bar_stay,
    )


def bosonic_equilibrate(
    spec: MachineSpec,
    state: BlockState,
    beta: float,
    tau_beta: float,
    printed: bool = False,
) -> BlockState:
    """Finite-time qubit equilibration at the clock marginal's splitting."""
    marginal = state.clock_marginal()
    delta = float(np.real(np.trace(marginal @ spec.h_plus)))
    c = bosonic_coefficients(delta, beta, tau_beta, printed)
    return BlockState(
        c.c_psi_stay * state.block_psi + c.c_bar_to_psi * state.block_psibar,
        c.c_psi_to_bar * state.block_psi + c.c_bar_stay * state.block_psibar,
    )


def thermalize_and_evolve(
    spec: MachineSpec, state: BlockState, dt: float, beta: float, model: ThermModel
) -> BlockState:
    """Interleave ``model.n_beta`` thermalisations with evolutions of dt / n_beta."""
    sub_step = dt / model.n_beta
    for _ in range(model.n_beta):
        if model.kind == "bosonic":
            state = bosonic_equilibrate(
                spec, state, beta, model.tau_beta, model.printed_coefficients
            )
        else:
            state = gibbs_thermalize(spec, state, beta)
        state = conditional_evolve(spec, state, sub_step)
    return state


def simulate_selective_steps(
    spec: MachineSpec,
    beta: float,
    dt: float,
    model: ThermModel,
    flip_convention: str = "printed",
) -> list[UnitStep]:
    """Step the success branch of the selective engine through the unit protocol.

    The state carried between unit protocols is the post-measurement state
    of outcome d, so partial equilibration keeps its qubit memory.
    """
    n_steps, step = cycle_grid(spec, dt)
    state = reference_state(spec, spec.tau_tilde)
    steps = []
    for k in range(n_steps):
        t = spec.tau_tilde + k * step
        records, pre = run_unit_protocol(spec, state, t, step, beta, model)
        success = next((r for r in records if not r.is_misfire), None)
        misfires = [r for r in records if r.is_misfire]
        probabilities = np.array([r.probability for r in records])
        steps.append(
            UnitStep(
                t=t,
                success_probability=success.probability if success else 0.0,
                success_energy=success.energy_to_apparatus if success else 0.0,
                misfire_probabilities=np.array([r.probability for r in misfires]),
                misfire_energies=np.array(
                    [
                        r.energy_to_apparatus + flip_energy(spec, r.post_state, flip_convention)
                        for r in misfires
                    ]
                ),
                reset_cost=landauer_reset(probabilities / probabilities.sum(), beta),
                heat_before=pre.energy(spec) - state.energy(spec),
            )
        )
        if success is None:
            logger.warning("Reference outcome has zero probability at t=%.6g", t + step)
            break
        state = success.post_state
    return steps


def run_subunit_cycle(
    spec: MachineSpec,
    beta: float,
    dt: float,
    n_beta: int,
    tau_beta: float | None = None,
    printed_coefficients: bool = False,
    flip_convention: str = "printed",
) -> CycleLedger:
    """Selective cycle with ``n_beta`` thermalisation sub-units per unit protocol.

    Args:
        spec: Machine specification.
        beta: Inverse temperature.
        dt: Unit protocol duration (one measurement each).
        n_beta: Number of (thermalise, evolve) sub-units per unit protocol.
        tau_beta: Bosonic equilibration time per sub-unit; ``None`` means
            instant Gibbs thermalisation.
        printed_coefficients: Use the printed bosonic coefficient.
        flip_convention: Feedback flip accounting, see ``misfire_energy``.

    Returns:
        The selective cycle ledger.
    """
    if tau_beta is None:
        model = ThermModel.subunit(n_beta)
    else:
        model = ThermModel.bosonic(n_beta, tau_beta, printed_coefficients)
    _, step = cycle_grid(spec, dt)
    steps = simulate_selective_steps(spec, beta, dt, model, flip_convention)
    logger.debug("Sub-unit cycle %s: %d unit protocols", model.label, len(steps))
    return assemble_selective_ledger(steps, step)

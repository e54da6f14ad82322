"""Joint qubit-clock state and the thermalise / evolve / measure unit protocol.

The joint state is stored in qubit-diagonal block form: one weighted clock
matrix per qubit level (psi, psi-bar). Every map in this package keeps that
form, so qubit-clock cross-coherences never appear.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from clock_engine.spin_algebra import (
    MachineSpec,
    check_density_matrix,
    clock_frame,
    evolve_vectors,
    propagator,
    wigner_small_d,
)

logger = logging.getLogger(__name__)

STATE_TOL = 1e-10
PSD_TOL = 1e-12
ZERO_PROBABILITY = 1e-15

THERM_KINDS = ("instant", "subunit", "bosonic")


@dataclass(frozen=True)
class ThermModel:
    """How the qubit is brought into contact with the bath inside one unit protocol.

    ``instant`` is a single Gibbs reset followed by the full evolution.
    ``subunit`` splits the unit protocol into ``n_beta`` (Gibbs reset,
    evolve dt/n_beta) steps. ``bosonic`` does the same with a finite-time
    equilibration of duration ``tau_beta`` instead of the Gibbs reset.
    """

    kind: str = "instant"
    n_beta: int = 1
    tau_beta: float = math.inf
    printed_coefficients: bool = False

    def __post_init__(self) -> None:
        if self.kind not in THERM_KINDS:
            raise ValueError(
                f"Unknown thermalisation model {self.kind!r}; expected one of {THERM_KINDS}."
            )
        if int(self.n_beta) != self.n_beta or self.n_beta < 1:
            raise ValueError(f"n_beta must be an integer >= 1, got {self.n_beta}.")
        if not self.tau_beta >= 0:
            raise ValueError(f"tau_beta must be >= 0, got {self.tau_beta}.")
        if self.kind == "instant" and self.n_beta != 1:
            raise ValueError("The instant model has exactly one thermalisation (n_beta=1).")

    @classmethod
    def instant(cls) -> "ThermModel":
        return cls()

    @classmethod
    def subunit(cls, n_beta: int) -> "ThermModel":
        return cls(kind="subunit", n_beta=n_beta)

    @classmethod
    def bosonic(
        cls, n_beta: int, tau_beta: float, printed_coefficients: bool = False
    ) -> "ThermModel":
        return cls(
            kind="bosonic",
            n_beta=n_beta,
            tau_beta=tau_beta,
            printed_coefficients=printed_coefficients,
        )

    @property
    def label(self) -> str:
        if self.kind == "instant":
            return "instant"
        if self.kind == "subunit":
            return f"subunit({self.n_beta})"
        return f"bosonic({self.n_beta},{self.tau_beta:g})"


@dataclass(frozen=True, eq=False)
class BlockState:
    """Joint state as two clock blocks, each carrying its qubit weight as its trace."""

    block_psi: np.ndarray
    block_psibar: np.ndarray

    @classmethod
    def from_clock_vector(cls, vector: np.ndarray, weight_psi: float = 1.0) -> "BlockState":
        """Product state with the clock pure on ``vector`` and qubit populations given."""
        vector = np.asarray(vector, dtype=complex)
        projector = np.outer(vector, vector.conj())
        return cls(weight_psi * projector, (1.0 - weight_psi) * projector)

    @property
    def weight_psi(self) -> float:
        return float(np.real(np.trace(self.block_psi)))

    @property
    def weight_psibar(self) -> float:
        return float(np.real(np.trace(self.block_psibar)))

    def clock_marginal(self) -> np.ndarray:
        return self.block_psi + self.block_psibar

    def energy(self, spec: MachineSpec) -> float:
        """``tr[H_SM rho]`` with H_SM = diag(H-, H+) in the block picture."""
        return float(
            np.real(
                np.trace(spec.h_minus @ self.block_psi)
                + np.trace(spec.h_plus @ self.block_psibar)
            )
        )

    def validate(self, tol: float = STATE_TOL) -> "BlockState":
        """Check unit total trace and positivity of both blocks.

        Raises:
            ValueError: If an invariant is violated.
        """
        total = self.weight_psi + self.weight_psibar
        if abs(total - 1) > tol:
            raise ValueError(f"Block state has total trace {total:.12g}, expected 1.")
        for name, block in (("psi", self.block_psi), ("psibar", self.block_psibar)):
            if np.max(np.abs(block - block.conj().T), initial=0.0) > tol:
                raise ValueError(f"Block {name} is not Hermitian.")
            lowest = np.linalg.eigvalsh((block + block.conj().T) / 2)[0]
            if lowest < -PSD_TOL - tol:
                raise ValueError(
                    f"Block {name} is not positive semidefinite (lowest eigenvalue {lowest:.3e})."
                )
        return self


def reference_state(spec: MachineSpec, t: float) -> BlockState:
    """Qubit in psi, clock on the reference orbit chi(t)."""
    return BlockState.from_clock_vector(clock_frame(spec, t)[:, -1])


@dataclass(frozen=True)
class ThermalQubit:
    """Gibbs state of the qubit for splitting ``delta`` at inverse temperature ``beta``."""

    delta: float
    beta: float
    p0: float
    p1: float
    Z: float

    @classmethod
    def at(cls, delta: float, beta: float) -> "ThermalQubit":
        """Gibbs weights p0 = 1/(1 + e^{-beta delta}), p1 = 1 - p0.

        ``beta`` may be ``math.inf``; a degenerate splitting then gives 1/2.

        Raises:
            ValueError: If ``beta`` is not positive.
        """
        if not beta > 0:
            raise ValueError(f"Inverse temperature beta must be > 0, got {beta}.")
        x = beta * delta if delta != 0 else 0.0
        if x >= 0:
            p1 = float(expit(-x))
            p0 = 1.0 - p1
        else:
            p0 = float(expit(x))
            p1 = 1.0 - p0
        return cls(delta=float(delta), beta=float(beta), p0=p0, p1=p1, Z=1.0 / p0 if p0 > 0 else math.inf)


def _splitting(spec: MachineSpec, clock_state: np.ndarray) -> float:
    return float(np.real(np.trace(clock_state @ spec.h_plus)))


def level_splitting(spec: MachineSpec, clock_state: np.ndarray) -> float:
    """Induced qubit splitting ``tr[rho_M H_+]`` for a clock density matrix.

    Raises:
        ValueError: If ``clock_state`` is not a valid density matrix.
    """
    return _splitting(spec, check_density_matrix(clock_state, spec.d))


def gibbs_thermalize(spec: MachineSpec, state: BlockState, beta: float) -> BlockState:
    """Reset the qubit to the Gibbs state of the clock marginal's mean-field splitting."""
    marginal = state.clock_marginal()
    qubit = ThermalQubit.at(_splitting(spec, marginal), beta)
    return BlockState(qubit.p0 * marginal, qubit.p1 * marginal)


def conditional_evolve(spec: MachineSpec, state: BlockState, dt: float) -> BlockState:
    """Controlled unitary: U_- on the psi block, U_+ on the psi-bar block.

    Raises:
        ValueError: If ``dt`` is negative.
    """
    if dt < 0:
        raise ValueError(f"Evolution step dt must be >= 0, got {dt}.")
    u_minus = propagator(spec, "minus", dt)
    u_plus = propagator(spec, "plus", dt)
    return BlockState(
        u_minus @ state.block_psi @ u_minus.conj().T,
        u_plus @ state.block_psibar @ u_plus.conj().T,
    )


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Doubly stochastic orbit-transition probabilities Gamma[m', m] (0-based, m ascending)."""

    entries: np.ndarray
    t: float
    dt: float

    @property
    def success(self) -> float:
        """Gamma_dd: probability of staying on the reference orbit."""
        return float(self.entries[-1, -1])

    def probability(self, m_to: int, m_from: int) -> float:
        """Gamma_{m_to, m_from} with orbit labels in 1..d."""
        return float(self.entries[m_to - 1, m_from - 1])


def transition_matrix(spec: MachineSpec, t: float, dt: float) -> TransitionMatrix:
    """Gamma_{m'm}(t, dt) = |<m'(t+dt)| U_+(dt) |m(t)>|^2 via the propagators."""
    frame_now = clock_frame(spec, t)
    frame_next = clock_frame(spec, t + dt)
    amplitudes = frame_next.conj().T @ evolve_vectors(spec, "plus", dt, frame_now)
    return TransitionMatrix(entries=np.abs(amplitudes) ** 2, t=float(t), dt=float(dt))


def transition_matrix_wigner(l: float | MachineSpec, t: float, dt: float) -> TransitionMatrix:
    """Spin-clock Gamma from products of Wigner small-d blocks.

    Uses Gamma_{m'm} = |sum_{k,k'} e^{-i(k t - k'(t+dt))} d_{k'k}(dt)
    d_{m'k'}(-pi/2) d_{km}(pi/2)|^2, then reorders to ascending m.

    Raises:
        ValueError: If a machine without a spin quantum number is passed.
    """
    if isinstance(l, MachineSpec):
        if not l.is_spin:
            raise ValueError("The Wigner route needs a spin clock (spec.l is None).")
        l = l.l
    to_orbit = wigner_small_d(l, math.pi / 2).entries
    from_orbit = wigner_small_d(l, -math.pi / 2).entries
    rotation = wigner_small_d(l, dt).entries
    k = l - np.arange(to_orbit.shape[0])
    amplitudes = (
        from_orbit
        @ np.diag(np.exp(1j * k * (t + dt)))
        @ rotation
        @ np.diag(np.exp(-1j * k * t))
        @ to_orbit
    )
    entries = (np.abs(amplitudes) ** 2)[::-1, ::-1]
    return TransitionMatrix(entries=np.ascontiguousarray(entries), t=float(t), dt=float(dt))


@dataclass(frozen=True, eq=False)
class UnitOutcomeRecord:
    """One harvesting-measurement outcome of a unit protocol.

    ``energy_to_apparatus`` is ``tr[H_SM (rho' - rho_m)]``: the energy the
    projection moves from the joint system into the apparatus.
    """

    m: int
    probability: float
    energy_to_apparatus: float
    post_state: BlockState
    is_misfire: bool


def clock_measurement(
    spec: MachineSpec, state: BlockState, t_meas: float
) -> list[UnitOutcomeRecord]:
    """Project the clock onto the rotating basis {|m(t_meas)>}."""
    frame = clock_frame(spec, t_meas)
    weights_psi = np.real(np.einsum("im,ij,jm->m", frame.conj(), state.block_psi, frame))
    weights_bar = np.real(np.einsum("im,ij,jm->m", frame.conj(), state.block_psibar, frame))
    energies_minus = np.real(np.einsum("im,ij,jm->m", frame.conj(), spec.h_minus, frame))
    energies_plus = np.real(np.einsum("im,ij,jm->m", frame.conj(), spec.h_plus, frame))
    energy_before = state.energy(spec)

    records = []
    for index in range(spec.d):
        w_psi = max(weights_psi[index], 0.0)
        w_bar = max(weights_bar[index], 0.0)
        probability = w_psi + w_bar
        if probability < ZERO_PROBABILITY:
            continue
        vector = frame[:, index]
        projector = np.outer(vector, vector.conj())
        post = BlockState((w_psi / probability) * projector, (w_bar / probability) * projector)
        energy_after = (w_psi * energies_minus[index] + w_bar * energies_plus[index]) / probability
        records.append(
            UnitOutcomeRecord(
                m=index + 1,
                probability=float(probability),
                energy_to_apparatus=float(energy_before - energy_after),
                post_state=post,
                is_misfire=index + 1 != spec.d,
            )
        )
    return records


def run_unit_protocol(
    spec: MachineSpec,
    state: BlockState,
    t: float,
    dt: float,
    beta: float,
    therm_model: ThermModel | None = None,
) -> tuple[list[UnitOutcomeRecord], BlockState]:
    """Thermalise, evolve for ``dt`` and measure at ``t + dt``.

    Returns:
        The outcome records and the pre-measurement state.
    """
    model = therm_model or ThermModel.instant()
    if model.kind == "instant":
        state = conditional_evolve(spec, gibbs_thermalize(spec, state, beta), dt)
    else:
        from clock_engine.therm_models import thermalize_and_evolve

        state = thermalize_and_evolve(spec, state, dt, beta, model)
    return clock_measurement(spec, state, t + dt), state

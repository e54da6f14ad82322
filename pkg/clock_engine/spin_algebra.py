"""Machine specifications: spin operators, machine Hamiltonians, Wigner blocks and clock bases."""

import functools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh
from scipy.special import gammaln

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12
DENSITY_TOL = 1e-10
DESIGN_TOL = 1e-9

_AXES = ("x", "y", "z")
_BRANCHES = ("minus", "plus")
_WIGNER_METHODS = ("eigen", "sum")


def validate_spin(l: float) -> float:
    """Check that ``l`` is a positive half-integer and return it as a float.

    Args:
        l: Spin quantum number.

    Returns:
        ``l`` as a float.

    Raises:
        ValueError: If ``2l`` is not a positive integer.
    """
    try:
        twice = 2.0 * float(l)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"Spin quantum number must be numeric, got {l!r}.") from exc
    if not math.isfinite(twice) or twice < 1 or abs(twice - round(twice)) > 1e-9:
        raise ValueError(
            f"Spin quantum number l={l!r} is invalid: 2l must be a positive "
            "integer (l = 1/2, 1, 3/2, ...)."
        )
    return round(twice) / 2.0


def angular_momentum(l: float, axis: str) -> np.ndarray:
    """Spin-``l`` angular momentum operator along ``axis``.

    The basis is ordered m = l, l-1, ..., -l so that L_z is diagonal and
    descending, with Condon-Shortley phases for the ladder operators.

    Args:
        l: Spin quantum number (half-integer >= 1/2).
        axis: One of ``"x"``, ``"y"``, ``"z"``.

    Returns:
        The (2l+1) x (2l+1) Hermitian matrix.

    Raises:
        ValueError: If ``l`` or ``axis`` is invalid.
    """
    l = validate_spin(l)
    if axis not in _AXES:
        raise ValueError(f"Unknown axis {axis!r}; expected one of {_AXES}.")
    m = l - np.arange(int(round(2 * l)) + 1)
    if axis == "z":
        return np.diag(m).astype(complex)
    # <m+1|L+|m> sits on the superdiagonal for descending m
    raising = np.diag(np.sqrt(l * (l + 1) - m[1:] * (m[1:] + 1)), k=1).astype(complex)
    lowering = raising.conj().T
    if axis == "x":
        return (raising + lowering) / 2
    return (raising - lowering) / 2j


@dataclass(frozen=True, eq=False)
class MachineSpec:
    """The "hardware" of the machine: clock Hamiltonians and their derived data.

    Attributes:
        h_minus: Clock Hamiltonian conditioned on the qubit state psi.
        h_plus: Clock Hamiltonian conditioned on the qubit state psi-bar.
        c: Generator ``i[H-, H+]``.
        c_eigenvalues: Ascending eigenvalues of ``c``.
        c_basis: Matching eigenvectors as columns (``|1>`` ... ``|d>``).
        eig_minus: Cached ``(values, vectors)`` of ``h_minus``.
        eig_plus: Cached ``(values, vectors)`` of ``h_plus``.
        l: Spin quantum number for spin clocks, ``None`` otherwise.
        tau_tilde: Time at which bath contact and harvesting start.
        tau_prime: Time at which the engine stops extracting work.
        period: Clock period.
    """

    h_minus: np.ndarray
    h_plus: np.ndarray
    c: np.ndarray
    c_eigenvalues: np.ndarray
    c_basis: np.ndarray
    eig_minus: tuple[np.ndarray, np.ndarray]
    eig_plus: tuple[np.ndarray, np.ndarray]
    l: float | None = None
    tau_tilde: float = math.pi / 2
    tau_prime: float = math.pi
    period: float = 2 * math.pi
    _minus_overlap: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        # V-^dagger |m>, reused by every clock_frame evaluation
        object.__setattr__(
            self, "_minus_overlap", self.eig_minus[1].conj().T @ self.c_basis
        )

    @property
    def d(self) -> int:
        return self.h_minus.shape[0]

    @property
    def h_i(self) -> np.ndarray:
        return (self.h_plus - self.h_minus) / 2

    @property
    def h_f(self) -> np.ndarray:
        return (self.h_plus + self.h_minus) / 2

    @property
    def is_spin(self) -> bool:
        return self.l is not None

    def eig(self, branch: str) -> tuple[np.ndarray, np.ndarray]:
        """Cached eigendecomposition of the Hamiltonian for ``branch``."""
        _check_branch(branch)
        return self.eig_minus if branch == "minus" else self.eig_plus

    def hamiltonian(self, branch: str) -> np.ndarray:
        _check_branch(branch)
        return self.h_minus if branch == "minus" else self.h_plus


def _check_branch(branch: str) -> None:
    if branch not in _BRANCHES:
        raise ValueError(f"Unknown branch {branch!r}; expected one of {_BRANCHES}.")


def _check_hermitian(name: str, matrix: np.ndarray) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {matrix.shape}.")
    deviation = np.max(np.abs(matrix - matrix.conj().T))
    if deviation > HERMITIAN_TOL:
        raise ValueError(
            f"{name} is not Hermitian: max |H - H^dagger| = {deviation:.3e} "
            f"exceeds {HERMITIAN_TOL:g}."
        )
    return (matrix + matrix.conj().T) / 2


def build_machine(
    h_minus: np.ndarray,
    h_plus: np.ndarray,
    *,
    l: float | None = None,
    tau_tilde: float = math.pi / 2,
    tau_prime: float = math.pi,
    period: float = 2 * math.pi,
) -> MachineSpec:
    """Build a machine specification from arbitrary Hermitian H- and H+.

    Args:
        h_minus: Clock Hamiltonian conditioned on psi.
        h_plus: Clock Hamiltonian conditioned on psi-bar.
        l: Spin quantum number when the pair comes from the spin construction.
        tau_tilde: Start of the harvesting window.
        tau_prime: End of the harvesting window.
        period: Clock period.

    Returns:
        The immutable machine specification.

    Raises:
        ValueError: If the matrices are not Hermitian, not the same shape,
            or the harvesting window is not ordered inside one period.
    """
    h_minus = _check_hermitian("H_minus", h_minus)
    h_plus = _check_hermitian("H_plus", h_plus)
    if h_minus.shape != h_plus.shape:
        raise ValueError(
            f"H_minus {h_minus.shape} and H_plus {h_plus.shape} differ in shape."
        )
    if not 0 <= tau_tilde < tau_prime <= period:
        raise ValueError(
            f"Harvesting window must satisfy 0 <= tau_tilde < tau_prime <= period, "
            f"got tau_tilde={tau_tilde}, tau_prime={tau_prime}, period={period}."
        )

    c = 1j * (h_minus @ h_plus - h_plus @ h_minus)
    c = (c + c.conj().T) / 2
    c_eigenvalues, c_basis = eigh(c)
    spec = MachineSpec(
        h_minus=h_minus,
        h_plus=h_plus,
        c=c,
        c_eigenvalues=c_eigenvalues,
        c_basis=c_basis,
        eig_minus=eigh(h_minus),
        eig_plus=eigh(h_plus),
        l=l,
        tau_tilde=float(tau_tilde),
        tau_prime=float(tau_prime),
        period=float(period),
    )
    logger.debug("Built machine with d=%d (l=%s)", spec.d, l)
    return spec


def build_spin_machine(
    l: float, *, tau_tilde: float = math.pi / 2, tau_prime: float = math.pi
) -> MachineSpec:
    """Spin-``l`` clock with H_+- = (L_y +- L_z)/sqrt(2) and C = -L_x."""
    l = validate_spin(l)
    l_y = angular_momentum(l, "y")
    l_z = angular_momentum(l, "z")
    return build_machine(
        (l_y - l_z) / math.sqrt(2),
        (l_y + l_z) / math.sqrt(2),
        l=l,
        tau_tilde=tau_tilde,
        tau_prime=tau_prime,
    )


def evolve_vectors(
    spec: MachineSpec, branch: str, t: float, vectors: np.ndarray
) -> np.ndarray:
    """Apply U_branch(t) to a vector or to the columns of a matrix."""
    values, basis = spec.eig(branch)
    phases = np.exp(-1j * values * t)
    coefficients = basis.conj().T @ vectors
    if coefficients.ndim == 1:
        return basis @ (phases * coefficients)
    return basis @ (phases[:, None] * coefficients)


def propagator(spec: MachineSpec, branch: str, t: float) -> np.ndarray:
    """U_+-(t) = exp(-i H_+- t) from the cached eigendecomposition.

    Raises:
        ValueError: If ``branch`` is unknown or ``t`` is not finite.
    """
    if not math.isfinite(t):
        raise ValueError(f"Propagation time must be finite, got {t}.")
    values, basis = spec.eig(branch)
    return (basis * np.exp(-1j * values * t)) @ basis.conj().T


@dataclass(frozen=True, eq=False)
class WignerBlock:
    """Real Wigner small-d matrix, rows m' and columns m descending from l."""

    l: float
    beta_angle: float
    entries: np.ndarray


@functools.lru_cache(maxsize=32)
def _ly_eigensystem(l: float) -> tuple[np.ndarray, np.ndarray]:
    values, vectors = eigh(angular_momentum(l, "y"))
    values.setflags(write=False)
    vectors.setflags(write=False)
    return values, vectors


def _wigner_sum(l: float, beta_angle: float) -> np.ndarray:
    """Factorial-sum small-d entries in log-gamma form with explicit sign tracking.

    The alternating sum cancels badly once l passes about 20.
    """
    d = int(round(2 * l)) + 1
    m = l - np.arange(d)
    m_row = m[:, None, None]
    m_col = m[None, :, None]
    s = np.arange(d)[None, None, :]

    a_col = np.rint(l + m_col - s).astype(int)
    a_diff = np.rint(m_row - m_col + s).astype(int)
    a_row = np.rint(l - m_row - s).astype(int)
    valid = (a_col >= 0) & (a_diff >= 0) & (a_row >= 0)

    log_prefactor = 0.5 * (
        gammaln(l + m_row + 1)
        + gammaln(l - m_row + 1)
        + gammaln(l + m_col + 1)
        + gammaln(l - m_col + 1)
    )
    log_denominator = (
        gammaln(np.where(valid, a_col, 0) + 1)
        + gammaln(s + 1)
        + gammaln(np.where(valid, a_diff, 0) + 1)
        + gammaln(np.where(valid, a_row, 0) + 1)
    )
    cos_power = np.where(valid, a_col + a_row, 0)
    sin_power = np.where(valid, a_diff + s, 0)

    half_cos = math.cos(beta_angle / 2)
    half_sin = math.sin(beta_angle / 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_trig = np.where(cos_power == 0, 0.0, cos_power * np.log(abs(half_cos)))
        log_trig = log_trig + np.where(
            sin_power == 0, 0.0, sin_power * np.log(abs(half_sin))
        )
        magnitude = np.exp(log_prefactor - log_denominator + log_trig)
    sign = np.where(a_diff % 2 == 0, 1.0, -1.0)
    if half_cos < 0:
        sign = sign * np.where(cos_power % 2 == 0, 1.0, -1.0)
    if half_sin < 0:
        sign = sign * np.where(sin_power % 2 == 0, 1.0, -1.0)

    return np.where(valid, sign * magnitude, 0.0).sum(axis=2)


def wigner_small_d(l: float, beta_angle: float, method: str = "eigen") -> WignerBlock:
    """Wigner small-d matrix d^l_{m'm}(beta) = <m'|exp(-i L_y beta)|m>.

    ``"eigen"`` exponentiates L_y through its cached eigendecomposition and
    stays orthogonal to machine precision for any l. ``"sum"`` evaluates the
    closed factorial sum; it is exact for small l but loses accuracy beyond
    l of about 20.

    Args:
        l: Spin quantum number.
        beta_angle: Rotation angle in radians.
        method: ``"eigen"`` or ``"sum"``.

    Returns:
        The block, indexed in the ``angular_momentum`` basis order.

    Raises:
        ValueError: If ``l`` or ``method`` is invalid.
    """
    l = validate_spin(l)
    if method not in _WIGNER_METHODS:
        raise ValueError(f"Unknown Wigner method {method!r}; expected one of {_WIGNER_METHODS}.")
    if method == "sum":
        entries = _wigner_sum(l, beta_angle)
    else:
        values, vectors = _ly_eigensystem(l)
        rotation = (vectors * np.exp(-1j * values * beta_angle)) @ vectors.conj().T
        # exp(-i beta L_y) is real with Condon-Shortley phases
        entries = np.real(rotation)
    return WignerBlock(l=l, beta_angle=float(beta_angle), entries=entries)


def clock_frame(spec: MachineSpec, t: float) -> np.ndarray:
    """All rotating clock states ``|m(t)> = U_-(t)|m>`` as columns (m ascending)."""
    values, basis = spec.eig_minus
    return basis @ (np.exp(-1j * values * t)[:, None] * spec._minus_overlap)


def clock_basis_state(spec: MachineSpec, m: int, t: float) -> np.ndarray:
    """Rotating clock basis state ``|m(t)>`` for orbit index ``m`` in 1..d.

    Raises:
        ValueError: If ``m`` is outside 1..d.
    """
    if not 1 <= m <= spec.d:
        raise ValueError(f"Orbit index m={m} is outside 1..{spec.d}.")
    return evolve_vectors(spec, "minus", t, spec.c_basis[:, m - 1])


def orbit_energies(spec: MachineSpec, t: float, branch: str = "plus") -> np.ndarray:
    """``<m(t)|H_branch|m(t)>`` for every orbit m, as a real vector."""
    frame = clock_frame(spec, t)
    hamiltonian = spec.hamiltonian(branch)
    return np.real(np.einsum("im,ij,jm->m", frame.conj(), hamiltonian, frame))


def check_density_matrix(rho: np.ndarray, d: int, tol: float = DENSITY_TOL) -> np.ndarray:
    """Validate a d x d density matrix and return it as a complex array.

    Raises:
        ValueError: If ``rho`` has the wrong shape, is not Hermitian, not
            positive semidefinite or not of unit trace.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (d, d):
        raise ValueError(f"Clock state must be {d}x{d}, got shape {rho.shape}.")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ValueError("Clock state is not Hermitian.")
    trace = np.real(np.trace(rho))
    if abs(trace - 1) > tol:
        raise ValueError(f"Clock state has trace {trace:.12g}, expected 1.")
    lowest = np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0]
    if lowest < -tol:
        raise ValueError(
            f"Clock state is not positive semidefinite (lowest eigenvalue {lowest:.3e})."
        )
    return rho


@dataclass(frozen=True)
class DesignReport:
    """Expectation values behind the three machine design conditions.

    ``coherence_score`` is ``tr[rho C] / lambda_max(C)``; no pass threshold
    is applied to it.
    """

    trace_h_i: float
    trace_h_minus: float
    coherence_score: float
    condition_i: bool
    condition_ii: bool


def verify_design_conditions(spec: MachineSpec, rho_m: np.ndarray) -> DesignReport:
    """Evaluate the design conditions for a clock state ``rho_m``."""
    rho_m = check_density_matrix(rho_m, spec.d)
    trace_h_i = float(np.real(np.trace(rho_m @ spec.h_i)))
    trace_h_minus = float(np.real(np.trace(rho_m @ spec.h_minus)))
    top = float(spec.c_eigenvalues[-1])
    score = float(np.real(np.trace(rho_m @ spec.c))) / top if top > 0 else 0.0
    return DesignReport(
        trace_h_i=trace_h_i,
        trace_h_minus=trace_h_minus,
        coherence_score=score,
        condition_i=abs(trace_h_i) < DESIGN_TOL,
        condition_ii=abs(trace_h_minus) < DESIGN_TOL,
    )

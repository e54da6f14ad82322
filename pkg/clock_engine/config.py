"""Engine run configuration and its resolution from flags, config file and environment."""

import dataclasses
import logging
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from dotenv import dotenv_values

from clock_engine.accounting import FLIP_CONVENTIONS
from clock_engine.engine_core import THERM_KINDS
from clock_engine.grids import parse_grid

logger = logging.getLogger(__name__)

ENV_PREFIX = "CLOCK_ENGINE_"
RUN_MODES = ("selective", "unselective", "zeno")
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


class ConfigError(ValueError):
    """Invalid configuration value.

    Attributes:
        field: Name of the offending configuration field.
    """

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class EngineConfig:
    """Everything needed to run one experiment or one sweep.

    Scalar fields describe a single engine run; the ``*_values`` grids,
    when set, replace the scalar of the same name in sweeps.
    """

    l: float = 1.0
    dt: float = 0.05
    beta: float = 1.0
    tau_tilde: float = math.pi / 2
    tau_prime: float = math.pi
    mode: str = "selective"
    therm_model: str = "instant"
    n_beta: int = 1
    tau_beta: float = math.inf
    printed_coefficients: bool = False
    flip_convention: str = "printed"
    q: float = 0.0
    classical_limit: bool = False
    n_samples: int = 1000
    seed: int = 0
    workers: int = 1
    l_values: tuple[float, ...] | None = None
    dt_values: tuple[float, ...] | None = None
    q_values: tuple[float, ...] | None = None
    n_beta_values: tuple[int, ...] | None = None
    tau_beta_values: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if not 0 <= self.tau_tilde < self.tau_prime <= 2 * math.pi:
            field = "tau_tilde" if self.tau_tilde < 0 else "tau_prime"
            raise ConfigError(
                field,
                f"need 0 <= tau_tilde < tau_prime <= 2*pi, got "
                f"tau_tilde={self.tau_tilde}, tau_prime={self.tau_prime}.",
            )
        for l in (self.l, *(self.l_values or ())):
            _check_spin(l)
        for dt in (self.dt, *(self.dt_values or ())):
            self._check_dt(dt)
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ConfigError("beta", f"must be positive and finite, got {self.beta}.")
        _check_choice("mode", self.mode, RUN_MODES)
        _check_choice("therm_model", self.therm_model, THERM_KINDS)
        _check_choice("flip_convention", self.flip_convention, FLIP_CONVENTIONS)
        for n in (self.n_beta, *(self.n_beta_values or ())):
            if int(n) != n or n < 1:
                raise ConfigError("n_beta", f"must be an integer >= 1, got {n}.")
        for tau in (self.tau_beta, *(self.tau_beta_values or ())):
            if not tau >= 0:
                raise ConfigError("tau_beta", f"must be >= 0, got {tau}.")
        for q in (self.q, *(self.q_values or ())):
            if not 0 <= q <= 1:
                raise ConfigError("q", f"must lie in [0, 1], got {q}.")
        if self.workers < 1:
            raise ConfigError("workers", f"must be >= 1, got {self.workers}.")
        if self.n_samples < 1:
            raise ConfigError("n_samples", f"must be >= 1, got {self.n_samples}.")

    def _check_dt(self, dt: float) -> None:
        window = self.tau_prime - self.tau_tilde
        if not 0 < dt <= window:
            raise ConfigError(
                "dt", f"must satisfy 0 < dt <= tau_prime - tau_tilde = {window:.6g}, got {dt}."
            )

    @property
    def l_grid(self) -> tuple[float, ...]:
        return self.l_values or (self.l,)

    @property
    def dt_grid(self) -> tuple[float, ...]:
        return self.dt_values or (self.dt,)

    @property
    def q_grid(self) -> tuple[float, ...]:
        return self.q_values or (self.q,)

    @property
    def n_beta_grid(self) -> tuple[int, ...]:
        return self.n_beta_values or (self.n_beta,)

    @property
    def tau_beta_grid(self) -> tuple[float, ...]:
        return self.tau_beta_values or (self.tau_beta,)


def _check_spin(l: float) -> None:
    twice = 2 * l
    if not (twice >= 1 and abs(twice - round(twice)) < 1e-9):
        raise ConfigError("l", f"2l must be a positive integer, got l={l}.")


def _check_choice(field: str, value: str, choices: tuple[str, ...]) -> None:
    if value not in choices:
        raise ConfigError(field, f"must be one of {', '.join(choices)}; got {value!r}.")


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in _TRUE:
        return True
    if lowered in _FALSE:
        return False
    raise ValueError(f"{text!r} is not a boolean.")


def _parse_int(text: str) -> int:
    value = float(text)
    if value != int(value):
        raise ValueError(f"{text!r} is not an integer.")
    return int(value)


_PARSERS = {
    "l": float,
    "dt": float,
    "beta": float,
    "tau_tilde": float,
    "tau_prime": float,
    "mode": str.strip,
    "therm_model": str.strip,
    "n_beta": _parse_int,
    "tau_beta": float,
    "printed_coefficients": _parse_bool,
    "flip_convention": str.strip,
    "q": float,
    "classical_limit": _parse_bool,
    "n_samples": _parse_int,
    "seed": _parse_int,
    "workers": _parse_int,
    "l_values": parse_grid,
    "dt_values": parse_grid,
    "q_values": parse_grid,
    "n_beta_values": lambda text: parse_grid(text, integer=True),
    "tau_beta_values": parse_grid,
}

FIELD_NAMES = tuple(f.name for f in dataclasses.fields(EngineConfig))


def parse_field(field: str, raw: str) -> Any:
    """Parse the raw string form of ``field``.

    Raises:
        ConfigError: If ``raw`` is not a valid value for ``field``.
    """
    try:
        return _PARSERS[field](raw)
    except ValueError as err:
        raise ConfigError(field, str(err)) from None


def load_config_file(config_path: str | Path | None) -> dict[str, str]:
    """Read a flat ``key=value`` config file.

    Keys are matched case-insensitively against the EngineConfig fields.

    Returns:
        Mapping of field name to raw string value, or an empty dict.

    Raises:
        FileNotFoundError: If a path was given but the file does not exist.
        ConfigError: If the file names an unknown field.
    """
    if config_path is None:
        return {}
    path = Path(config_path)
    if not path.exists():
        raise FileNotFoundError(f"Config file ({path}) does not exist.")
    values = {}
    for key, value in dotenv_values(path).items():
        field = key.strip().lower()
        if field not in _PARSERS:
            raise ConfigError(field, f"unknown configuration key in {path}.")
        if value is not None:
            values[field] = value
    logger.debug("Read %d setting(s) from %s", len(values), path)
    return values


def load_config(
    cli_overrides: dict[str, Any] | None = None,
    config_path: str | Path | None = None,
) -> EngineConfig:
    """Resolve an EngineConfig.

    Resolution order per field:
        1. ``cli_overrides`` entries that are not None
        2. the key in the config file at ``config_path``
        3. the ``CLOCK_ENGINE_<FIELD>`` environment variable
        4. the EngineConfig default

    Args:
        cli_overrides: Already typed values from the command line.
        config_path: Optional dotenv-style config file.

    Returns:
        The validated configuration.

    Raises:
        ConfigError: If a value cannot be parsed or fails validation.
        FileNotFoundError: If ``config_path`` does not exist.
    """
    overrides = {k: v for k, v in (cli_overrides or {}).items() if v is not None}
    file_values = load_config_file(config_path)
    resolved: dict[str, Any] = {}
    for field in FIELD_NAMES:
        if field in overrides:
            resolved[field] = overrides[field]
        elif field in file_values:
            resolved[field] = parse_field(field, file_values[field])
        elif (env := os.environ.get(ENV_PREFIX + field.upper())) is not None:
            resolved[field] = parse_field(field, env)
    return EngineConfig(**resolved)

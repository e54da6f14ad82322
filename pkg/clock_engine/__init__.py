"""clock_engine - simulator of a clock-driven, measurement-stabilised qubit work engine."""

from clock_engine.accounting import (
    CycleLedger,
    flip_energy,
    heat_flow,
    landauer_reset,
    misfire_energy,
    sample_selective_cycles,
    selective_cycle_average,
    success_energy,
    unselective_cycle_average,
)
from clock_engine.config import ConfigError, EngineConfig, load_config
from clock_engine.engine_core import (
    BlockState,
    ThermModel,
    clock_measurement,
    conditional_evolve,
    gibbs_thermalize,
    level_splitting,
    run_unit_protocol,
    transition_matrix,
    transition_matrix_wigner,
)
from clock_engine.mixed_fuel import (
    breakeven_mixedness,
    first_measurement_failure,
    mixed_cycle_stats,
    stationary_mixedness,
)
from clock_engine.runner import ExperimentRunner, SweepResult, run_single, run_sweep
from clock_engine.spin_algebra import (
    MachineSpec,
    angular_momentum,
    build_machine,
    build_spin_machine,
    clock_basis_state,
    propagator,
    verify_design_conditions,
    wigner_small_d,
)
from clock_engine.therm_models import (
    bosonic_coefficients,
    bosonic_equilibrate,
    run_subunit_cycle,
)
from clock_engine.utils import emit_csv
from clock_engine.zeno import free_energy, zeno_power, zeno_total_work, zeno_total_work_spin

__all__ = [
    "BlockState",
    "ConfigError",
    "CycleLedger",
    "EngineConfig",
    "ExperimentRunner",
    "MachineSpec",
    "SweepResult",
    "ThermModel",
    "angular_momentum",
    "bosonic_coefficients",
    "bosonic_equilibrate",
    "breakeven_mixedness",
    "build_machine",
    "build_spin_machine",
    "clock_basis_state",
    "clock_measurement",
    "conditional_evolve",
    "emit_csv",
    "first_measurement_failure",
    "flip_energy",
    "free_energy",
    "gibbs_thermalize",
    "heat_flow",
    "landauer_reset",
    "level_splitting",
    "load_config",
    "misfire_energy",
    "mixed_cycle_stats",
    "propagator",
    "run_single",
    "run_subunit_cycle",
    "run_sweep",
    "run_unit_protocol",
    "sample_selective_cycles",
    "selective_cycle_average",
    "stationary_mixedness",
    "success_energy",
    "transition_matrix",
    "transition_matrix_wigner",
    "unselective_cycle_average",
    "verify_design_conditions",
    "wigner_small_d",
    "zeno_power",
    "zeno_total_work",
    "zeno_total_work_spin",
]

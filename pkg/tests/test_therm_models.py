"""Tests for clock_engine.therm_models."""

import math

import pytest
from numpy.testing import assert_allclose

from clock_engine.accounting import selective_cycle_average
from clock_engine.engine_core import (
    BlockState,
    ThermalQubit,
    ThermModel,
    gibbs_thermalize,
    reference_state,
)
from clock_engine.spin_algebra import build_spin_machine, clock_frame
from clock_engine.therm_models import (
    bosonic_coefficients,
    bosonic_equilibrate,
    run_subunit_cycle,
    thermalize_and_evolve,
)


@pytest.fixture
def spin_two():
    """Spin-2 machine with the default harvesting window."""
    return build_spin_machine(2)


class TestBosonicCoefficients:
    """Tests for bosonic_coefficients."""

    def test_zero_time_is_identity(self):
        c = bosonic_coefficients(1.0, 1.0, 0.0)
        assert (c.c_psi_stay, c.c_bar_stay) == (1.0, 1.0)
        assert (c.c_psi_to_bar, c.c_bar_to_psi) == (0.0, 0.0)

    def test_long_time_reaches_gibbs(self):
        c = bosonic_coefficients(1.0, 1.0, math.inf)
        assert c.c_psi_to_bar == pytest.approx(math.exp(-1) / (1 + math.exp(-1)), abs=1e-12)
        assert c.c_psi_to_bar == pytest.approx(0.2689, abs=1e-4)

    def test_occupation_number(self):
        c = bosonic_coefficients(0.5, 2.0, 1.0)
        assert c.n_bar == pytest.approx(1 / (math.e - 1), abs=1e-12)

    def test_columns_preserve_trace(self):
        c = bosonic_coefficients(0.7, 1.3, 0.4)
        assert c.c_psi_stay + c.c_psi_to_bar == pytest.approx(1.0, abs=1e-14)
        assert c.c_bar_stay + c.c_bar_to_psi == pytest.approx(1.0, abs=1e-14)

    def test_negative_splitting_swaps_roles(self):
        up = bosonic_coefficients(0.8, 1.0, math.inf)
        down = bosonic_coefficients(-0.8, 1.0, math.inf)
        assert down.c_psi_to_bar == pytest.approx(up.c_bar_to_psi, abs=1e-12)

    def test_degenerate_splitting_equilibrates(self):
        c = bosonic_coefficients(0.0, 1.0, 0.5)
        assert c.c_psi_to_bar == pytest.approx(0.5, abs=1e-12)

    def test_printed_coefficient_differs(self):
        exact = bosonic_coefficients(1.0, 1.0, 0.3)
        printed = bosonic_coefficients(1.0, 1.0, 0.3, printed=True)
        assert printed.c_psi_to_bar != pytest.approx(exact.c_psi_to_bar)
        assert printed.c_psi_stay == exact.c_psi_stay

    def test_rejects_negative_time(self):
        with pytest.raises(ValueError, match="tau_beta"):
            bosonic_coefficients(1.0, 1.0, -1.0)


class TestBosonicEquilibrate:
    """Tests for bosonic_equilibrate."""

    def test_zero_time_returns_input(self, spin_two):
        state = gibbs_thermalize(spin_two, reference_state(spin_two, 2.0), 1.0)
        out = bosonic_equilibrate(spin_two, state, 1.0, 0.0)
        assert_allclose(out.block_psi, state.block_psi, atol=1e-14)
        assert_allclose(out.block_psibar, state.block_psibar, atol=1e-14)

    def test_long_time_equals_gibbs(self, spin_two):
        state = reference_state(spin_two, 2.0)
        out = bosonic_equilibrate(spin_two, state, 1.0, math.inf)
        gibbs = gibbs_thermalize(spin_two, state, 1.0)
        assert_allclose(out.block_psi, gibbs.block_psi, atol=1e-10)
        assert_allclose(out.block_psibar, gibbs.block_psibar, atol=1e-10)

    def test_idempotent_at_fixed_point(self, spin_two):
        state = reference_state(spin_two, 1.8)
        once = bosonic_equilibrate(spin_two, state, 1.0, math.inf)
        twice = bosonic_equilibrate(spin_two, once, 1.0, math.inf)
        assert_allclose(twice.block_psibar, once.block_psibar, atol=1e-12)

    @pytest.mark.parametrize("tau", [0.1, 0.5, 2.0])
    def test_scalar_relaxation(self, spin_two, tau):
        t, beta, start_bar = 2.0, 0.7, 0.9
        state = BlockState.from_clock_vector(clock_frame(spin_two, t)[:, -1], 1 - start_bar)
        delta = 2 * math.sin(t)
        equilibrium = ThermalQubit.at(delta, beta).p1
        n_bar = 1 / math.expm1(beta * delta)
        expected = equilibrium + (start_bar - equilibrium) * math.exp(-(2 * n_bar + 1) * tau)
        out = bosonic_equilibrate(spin_two, state, beta, tau)
        assert out.weight_psibar == pytest.approx(expected, abs=1e-10)


class TestThermalizeAndEvolve:
    """Tests for thermalize_and_evolve."""

    def test_single_subunit_matches_instant_protocol(self, spin_two):
        from clock_engine.engine_core import conditional_evolve

        state = reference_state(spin_two, 2.0)
        out = thermalize_and_evolve(spin_two, state, 0.1, 1.0, ThermModel.subunit(1))
        expected = conditional_evolve(spin_two, gibbs_thermalize(spin_two, state, 1.0), 0.1)
        assert_allclose(out.block_psi, expected.block_psi, atol=1e-12)

    def test_preserves_trace(self, spin_two):
        state = reference_state(spin_two, 2.0)
        out = thermalize_and_evolve(spin_two, state, 0.2, 1.0, ThermModel.bosonic(4, 0.3))
        out.validate()


class TestRunSubunitCycle:
    """Tests for run_subunit_cycle."""

    def test_single_subunit_matches_instant_average(self):
        spec = build_spin_machine(1)
        instant = selective_cycle_average(spec, 1.0, 0.05)
        subunit = run_subunit_cycle(spec, 1.0, 0.05, 1)
        assert subunit.w_ideal == pytest.approx(instant.w_ideal, abs=1e-10)
        assert subunit.net_work == pytest.approx(instant.net_work, abs=1e-10)

    def test_more_subunits_extract_more(self):
        spec = build_spin_machine(5)
        works = [run_subunit_cycle(spec, 1.0, 0.05, n).w_ideal for n in (1, 2, 5, 10)]
        assert all(later >= earlier for earlier, later in zip(works, works[1:]))

    def test_finite_bath_time_collapses_large_clocks(self):
        dt = 0.05
        instant = run_subunit_cycle(build_spin_machine(20), 1.0, dt, 1).w_ideal
        w20 = run_subunit_cycle(build_spin_machine(20), 1.0, dt, 1, tau_beta=1.0).w_ideal
        w40 = run_subunit_cycle(build_spin_machine(40), 1.0, dt, 1, tau_beta=1.0).w_ideal
        assert w40 < w20 < instant

    def test_slow_bath_approaches_subunit_model(self):
        spec = build_spin_machine(2)
        subunit = run_subunit_cycle(spec, 1.0, 0.1, 2).w_ideal
        gaps = [
            abs(run_subunit_cycle(spec, 1.0, 0.1, 2, tau_beta=tau).w_ideal - subunit)
            for tau in (1.0, 10.0, 100.0)
        ]
        assert gaps[-1] <= gaps[0]
        assert gaps[-1] < 0.01 * abs(subunit)

    def test_bosonic_model_in_selective_average(self):
        spec = build_spin_machine(1)
        direct = run_subunit_cycle(spec, 1.0, 0.1, 2, tau_beta=0.5)
        via_average = selective_cycle_average(spec, 1.0, 0.1, ThermModel.bosonic(2, 0.5))
        assert direct.net_work == pytest.approx(via_average.net_work, abs=1e-12)

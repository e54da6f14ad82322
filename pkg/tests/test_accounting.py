"""Tests for clock_engine.accounting."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from clock_engine.accounting import (
    closed_form_steps,
    cycle_grid,
    flip_energy,
    heat_flow,
    landauer_reset,
    misfire_energy,
    sample_selective_cycles,
    selective_cycle_average,
    selective_success_profile,
    success_energy,
    success_probability,
    unselective_cycle_average,
)
from clock_engine.engine_core import BlockState, ThermModel, reference_state
from clock_engine.spin_algebra import build_spin_machine, clock_frame
from clock_engine.zeno import zeno_power, zeno_total_work

from tests.oracles import dense_flip, dense_state, dense_unit_protocol, enumerate_unselective


@pytest.fixture
def spin_one():
    """Spin-1 machine with the default harvesting window."""
    return build_spin_machine(1)


def _dense_step(spec, t, dt, beta):
    outcomes, _ = dense_unit_protocol(spec, dense_state(reference_state(spec, t)), t, dt, beta)
    return {m: (p, energy, post) for m, p, energy, post in outcomes}


def _p1(spec, t, beta):
    delta = spec.l * math.sin(t)
    return 1.0 / (1.0 + math.exp(beta * delta))


class TestCycleGrid:
    """Tests for cycle_grid."""

    def test_step_lands_on_window_end(self, spin_one):
        n_steps, step = cycle_grid(spin_one, 0.3)
        assert n_steps == 5
        assert n_steps * step == pytest.approx(math.pi / 2, abs=1e-14)

    def test_full_window(self, spin_one):
        assert cycle_grid(spin_one, math.pi / 2) == (1, pytest.approx(math.pi / 2))

    @pytest.mark.parametrize("dt", [0.0, -0.1, 2.0])
    def test_rejects_bad_steps(self, spin_one, dt):
        with pytest.raises(ValueError, match="dt"):
            cycle_grid(spin_one, dt)


class TestSuccessEnergy:
    """Tests for success_energy."""

    def test_zero_population_gives_zero(self, spin_one):
        assert success_energy(spin_one, 2.0, 0.05, 0.0) == 0.0

    def test_matches_dense_trace(self, spin_one):
        t, dt, beta = 2.0, 0.05, 1.0
        _, energy, _ = _dense_step(spin_one, t, dt, beta)[3]
        assert success_energy(spin_one, t, dt, _p1(spin_one, t, beta)) == pytest.approx(
            energy, abs=1e-10
        )

    def test_small_step_rate_is_zeno_power(self):
        spec = build_spin_machine(2)
        t, beta, dt = 2.3, 1.0, 1e-5
        rate = success_energy(spec, t, dt, _p1(spec, t, beta)) / dt
        assert rate == pytest.approx(-_p1(spec, t, beta) * 2 * math.cos(t), rel=1e-3)
        assert rate == pytest.approx(zeno_power(spec, t, beta), rel=1e-3)

    def test_rejects_invalid_population(self, spin_one):
        with pytest.raises(ValueError, match="p1"):
            success_energy(spin_one, 2.0, 0.05, 1.5)


class TestMisfireEnergy:
    """Tests for misfire_energy."""

    def test_measurement_part_matches_dense_trace(self, spin_one):
        t, dt, beta = 2.0, 0.05, 1.0
        _, energy, _ = _dense_step(spin_one, t, dt, beta)[2]
        result = misfire_energy(spin_one, t, dt, _p1(spin_one, t, beta), 2)
        assert result.measurement == pytest.approx(energy, abs=1e-10)
        assert np.sign(result.measurement) == np.sign(energy)

    def test_conserving_total_matches_dense_flip(self):
        spec = build_spin_machine(1.5)
        t, dt, beta = 1.9, 0.1, 1.0
        dense = _dense_step(spec, t, dt, beta)
        for m in range(1, spec.d):
            # the dense post state divides by p, so compare probability-weighted energies
            p, energy, post = dense[m]
            released, _ = dense_flip(spec, post)
            result = misfire_energy(spec, t, dt, _p1(spec, t, beta), m, "conserving")
            assert p * result.total == pytest.approx(p * (energy + released), abs=1e-10)

    def test_printed_flip_charges_plus_energy(self, spin_one):
        result = misfire_energy(spin_one, 2.0, 0.05, 0.3, 1)
        conserving = misfire_energy(spin_one, 2.0, 0.05, 0.3, 1, "conserving")
        assert result.measurement == conserving.measurement
        assert result.flip != conserving.flip

    def test_reference_orbit_is_not_a_misfire(self, spin_one):
        with pytest.raises(ValueError, match="reference orbit"):
            misfire_energy(spin_one, 2.0, 0.05, 0.3, 3)

    def test_unknown_convention(self, spin_one):
        with pytest.raises(ValueError, match="flip convention"):
            misfire_energy(spin_one, 2.0, 0.05, 0.3, 1, "lenient")


class TestFlipEnergy:
    """Tests for flip_energy."""

    @pytest.fixture
    def mixed_post_state(self, spin_one):
        """Misfire post state with weight left in both qubit blocks."""
        return BlockState.from_clock_vector(clock_frame(spin_one, 2.1)[:, 0], 0.3)

    def test_conserving_matches_dense_swap(self, spin_one, mixed_post_state):
        released, _ = dense_flip(spin_one, dense_state(mixed_post_state))
        assert flip_energy(spin_one, mixed_post_state, "conserving") == pytest.approx(
            released, abs=1e-12
        )

    def test_printed_charges_post_state_energy(self, spin_one, mixed_post_state):
        assert flip_energy(spin_one, mixed_post_state) == pytest.approx(
            -mixed_post_state.energy(spin_one), abs=1e-12
        )

    def test_psibar_only_state_reduces_to_orbit_form(self, spin_one):
        t, dt, p1, m = 2.0, 0.05, 0.3, 1
        vector = clock_frame(spin_one, t + dt)[:, m - 1]
        post = BlockState.from_clock_vector(vector, 0.0)
        for convention in ("printed", "conserving"):
            expected = misfire_energy(spin_one, t, dt, p1, m, convention).flip
            assert flip_energy(spin_one, post, convention) == pytest.approx(expected, abs=1e-12)


class TestLandauerReset:
    """Tests for landauer_reset."""

    def test_deterministic_record_is_free(self):
        assert landauer_reset([0.0, 1.0, 0.0], 1.0) == 0.0

    def test_fair_coin(self):
        assert landauer_reset([0.5, 0.5], 1.0) == pytest.approx(math.log(2), abs=1e-12)

    def test_three_outcomes(self):
        assert landauer_reset([0.5, 0.25, 0.25], 2.0) == pytest.approx(
            0.75 * math.log(2), abs=1e-12
        )
        assert landauer_reset([0.5, 0.25, 0.25], 2.0) == pytest.approx(0.519860, abs=1e-6)

    def test_zero_temperature_is_free(self):
        assert landauer_reset([0.5, 0.5], math.inf) == 0.0

    def test_rejects_unnormalised(self):
        with pytest.raises(ValueError, match="sum to"):
            landauer_reset([0.5, 0.2], 1.0)

    def test_rejects_negative(self):
        with pytest.raises(ValueError, match="non-negative"):
            landauer_reset([1.5, -0.5], 1.0)


class TestHeatFlow:
    """Tests for heat_flow."""

    def test_quantum_exceeds_classical(self, spin_one):
        flow = heat_flow(spin_one, 2.0, 0.05, 1.0)
        assert flow.quantum >= flow.classical

    def test_gap_closes_quadratically(self, spin_one):
        steps = np.array([1e-1, 1e-2, 1e-3])
        gaps = [
            (lambda f: f.quantum - f.classical)(heat_flow(spin_one, 2.0, dt, 1.0))
            for dt in steps
        ]
        slope = np.polyfit(np.log(steps), np.log(gaps), 1)[0]
        assert slope == pytest.approx(2.0, abs=0.15)


class TestSuccessProfile:
    """Tests for selective_success_profile and success_probability."""

    def test_matches_closed_form_steps(self, spin_one):
        profile = selective_success_profile(spin_one, 1.0, 0.1)
        steps = closed_form_steps(spin_one, 1.0, 0.1)
        assert_allclose(profile, [s.success_probability for s in steps], atol=1e-12)
        assert success_probability(spin_one, 1.0, 0.1) == pytest.approx(np.prod(profile))

    def test_misfire_probability_is_quadratic(self, spin_one):
        steps = np.array([1e-1, 3e-2, 1e-2, 3e-3])
        leaks = [1 - selective_success_profile(spin_one, 1.0, dt)[0] for dt in steps]
        slope = np.polyfit(np.log(steps), np.log(leaks), 1)[0]
        assert slope == pytest.approx(2.0, abs=0.15)


class TestSelectiveCycleAverage:
    """Tests for selective_cycle_average."""

    def test_zero_temperature_extracts_nothing(self):
        ledger = selective_cycle_average(build_spin_machine(2), math.inf, 0.1)
        assert ledger.success_probability == 1.0
        assert ledger.energy_to_apparatus == pytest.approx(0.0, abs=1e-12)
        assert ledger.reset_cost == 0.0
        assert ledger.net_work == pytest.approx(ledger.w_ideal, abs=1e-12)

    def test_outcome_probabilities_cover_every_cycle(self, spin_one):
        steps = closed_form_steps(spin_one, 1.0, 0.2)
        p_d = np.array([s.success_probability for s in steps])
        prefix = np.concatenate(([1.0], np.cumprod(p_d)))
        assert prefix[-1] + np.sum(prefix[:-1] * (1 - p_d)) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("l", [2, 3, 5])
    @pytest.mark.parametrize("dt", [0.05, 0.1])
    def test_average_below_ideal(self, l, dt):
        ledger = selective_cycle_average(build_spin_machine(l), 1.0, dt)
        assert ledger.net_work <= ledger.w_ideal

    def test_ideal_work_approaches_zeno_from_below(self):
        for l in (1, 5):
            spec = build_spin_machine(l)
            target = zeno_total_work(spec, 1.0)
            errors = [
                target - selective_cycle_average(spec, 1.0, dt).w_ideal
                for dt in (0.2, 0.1, 0.05, 0.025, 0.0125)
            ]
            assert all(e > 0 for e in errors)
            assert all(later < earlier for earlier, later in zip(errors, errors[1:]))

    def test_fine_grid_is_close_to_zeno(self):
        spec = build_spin_machine(5)
        ledger = selective_cycle_average(spec, 1.0, 0.01)
        target = math.log(2) - math.log(1 + math.exp(-5))
        assert abs(ledger.w_ideal - target) / target < 0.15
        assert abs(ledger.net_work - target) / target < 0.15

    @pytest.mark.parametrize("dt", [0.05, 0.2])
    def test_ideal_work_peaks_at_interior_spin(self, dt):
        spins = np.arange(1, 31) / 2
        work = [selective_cycle_average(build_spin_machine(l), 1.0, dt).w_ideal for l in spins]
        peak = int(np.argmax(work))
        assert 0 < peak < len(spins) - 1

    def test_finer_grid_dominates_coarse_grid(self):
        for l in np.arange(1, 31) / 2:
            spec = build_spin_machine(l)
            fine = selective_cycle_average(spec, 1.0, 0.01).w_ideal
            coarse = selective_cycle_average(spec, 1.0, 0.2).w_ideal
            assert fine >= coarse

    def test_per_step_reset_scaling(self, spin_one):
        steps = np.array([1e-1, 3e-2, 1e-2, 3e-3])
        first = [closed_form_steps(spin_one, 1.0, dt)[0].reset_cost for dt in steps]
        slope = np.polyfit(np.log(steps), np.log(first), 1)[0]
        assert 1.6 < slope < 2.05
        cycle = [selective_cycle_average(spin_one, 1.0, dt).reset_cost for dt in steps]
        assert all(later < earlier for earlier, later in zip(cycle, cycle[1:]))

    def test_heat_is_reported(self, spin_one):
        ledger = selective_cycle_average(spin_one, 1.0, 0.05)
        assert math.isfinite(ledger.heat_in)
        assert ledger.n_steps == 31

    @pytest.mark.parametrize("l", [1, 2, 3, 5])
    @pytest.mark.parametrize("dt", [0.02, 0.1])
    def test_feedback_beats_unselective_under_conserving_flip(self, l, dt):
        spec = build_spin_machine(l)
        selective = selective_cycle_average(spec, 1.0, dt, flip_convention="conserving")
        unselective = unselective_cycle_average(spec, 1.0, dt)
        assert selective.net_work >= unselective.net_work


class TestUnselectiveCycleAverage:
    """Tests for unselective_cycle_average."""

    def test_matches_exhaustive_enumeration(self):
        spec = build_spin_machine(0.5)
        beta, n_steps = 1.0, 4
        ledger = unselective_cycle_average(spec, beta, (math.pi / 2) / n_steps)
        energy, entropy = enumerate_unselective(spec, beta, n_steps)
        assert ledger.n_steps == n_steps
        assert ledger.energy_to_apparatus == pytest.approx(energy, abs=1e-10)
        assert ledger.reset_cost * beta == pytest.approx(entropy, abs=1e-10)

    def test_zero_temperature_keeps_reference_trajectory(self):
        ledger = unselective_cycle_average(build_spin_machine(2), math.inf, 0.1)
        assert ledger.success_probability == pytest.approx(1.0, abs=1e-12)
        assert ledger.reset_cost == 0.0

    def test_ideal_path_matches_selective(self, spin_one):
        selective = selective_cycle_average(spin_one, 1.0, 0.1)
        unselective = unselective_cycle_average(spin_one, 1.0, 0.1)
        assert unselective.w_ideal == pytest.approx(selective.w_ideal, abs=1e-10)
        assert unselective.success_probability == pytest.approx(
            selective.success_probability, abs=1e-12
        )

    def test_agrees_with_selective_on_fine_grid(self):
        spec = build_spin_machine(2)
        selective = selective_cycle_average(spec, 1.0, 0.005)
        unselective = unselective_cycle_average(spec, 1.0, 0.005)
        assert unselective.net_work == pytest.approx(selective.net_work, rel=0.01)

    def test_subunit_model_is_supported(self, spin_one):
        ledger = unselective_cycle_average(spin_one, 1.0, 0.1, ThermModel.subunit(2))
        assert math.isfinite(ledger.net_work)

    def test_bosonic_model_is_rejected(self, spin_one):
        with pytest.raises(ValueError, match="bosonic"):
            unselective_cycle_average(spin_one, 1.0, 0.1, ThermModel.bosonic(1, 1.0))


class TestSampleSelectiveCycles:
    """Tests for sample_selective_cycles."""

    def test_seeded_runs_repeat(self, spin_one):
        first = sample_selective_cycles(spin_one, 1.0, 0.1, 200, seed=11)
        second = sample_selective_cycles(spin_one, 1.0, 0.1, 200, seed=11)
        assert_allclose(first, second)

    def test_mean_is_close_to_exact_average(self, spin_one):
        works = sample_selective_cycles(spin_one, 1.0, 0.1, 4000, seed=1)
        exact = selective_cycle_average(spin_one, 1.0, 0.1).net_work
        assert abs(works.mean() - exact) < 5 * works.std() / math.sqrt(len(works)) + 1e-12

    def test_rejects_empty_sample(self, spin_one):
        with pytest.raises(ValueError, match="n_cycles"):
            sample_selective_cycles(spin_one, 1.0, 0.1, 0)

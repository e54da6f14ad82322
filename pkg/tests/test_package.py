"""Tests for the clock_engine package namespace."""

import pytest

import clock_engine


class TestPublicApi:
    """Tests for the names exported by clock_engine."""

    @pytest.mark.parametrize(
        "name",
        [
            "bosonic_coefficients",
            "clock_basis_state",
            "flip_energy",
            "heat_flow",
            "propagator",
            "zeno_total_work_spin",
        ],
    )
    def test_operation_is_exported(self, name):
        assert name in clock_engine.__all__
        assert callable(getattr(clock_engine, name))

    def test_every_export_resolves(self):
        for name in clock_engine.__all__:
            assert hasattr(clock_engine, name), name

    def test_exports_are_sorted(self):
        assert clock_engine.__all__ == sorted(clock_engine.__all__)

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wiretap.kkt import (
    default_grid_step,
    golden_section_max,
    validate,
    violating_set,
    xi_profile,
)
from wiretap.model import ChannelPair, SymmetricInput, secrecy_information, xi
from wiretap.numerics import DomainError
from wiretap.optimizer import run_ba

from test_model import symmetric_inputs

SQRT10 = math.sqrt(10.0)
CH10 = ChannelPair(1.0, SQRT10)
CH15 = ChannelPair(1.0, math.sqrt(1.5))


class TestGoldenSection:
    def test_parabola(self):
        x, fx = golden_section_max(lambda t: -(t - 0.3) ** 2, 0.0, 1.0)
        assert x == pytest.approx(0.3, abs=1e-8)
        assert fx == pytest.approx(0.0, abs=1e-15)

    def test_boundary_maximum(self):
        x, _ = golden_section_max(lambda t: t, 0.0, 2.0)
        assert x == pytest.approx(2.0, abs=1e-8)


class TestProfile:
    def test_equal_channels(self):
        inp = SymmetricInput(2.0, [0.0, 1.3, 2.0], [0.2, 0.3, 0.5])
        _, vals = xi_profile(inp, ChannelPair(1.0, 1.0), 0.05)
        assert np.allclose(vals, 0.0, atol=1e-9)

    def test_point_mass_closed_form(self):
        inp = SymmetricInput(3.0, [0.0], [1.0])
        xs, vals = xi_profile(inp, CH10, 0.1)
        expected = 0.5 * xs**2 * (1 - 1 / 10)
        assert np.allclose(vals, expected, atol=1e-8)
        assert xs[np.argmax(vals)] == 3.0

    def test_contains_support_points(self):
        inp = SymmetricInput(2.0, [0.0, 0.123456, 2.0], [0.2, 0.3, 0.5])
        xs, _ = xi_profile(inp, CH10, 0.05)
        assert set(inp.half_points.tolist()) <= set(xs.tolist())
        assert np.all(np.diff(xs) > 0)

    def test_grid_step_rule(self):
        assert default_grid_step(1.0, 6.0) == pytest.approx(0.02)
        assert default_grid_step(1.0, 0.5) == pytest.approx(0.01)
        # capped at 5e4 points
        assert default_grid_step(1.0, 1e4) == pytest.approx(1e4 / 49_999)


class TestValidate:
    def test_small_amplitude_two_point_passes(self):
        inp = SymmetricInput(0.5, [0.5], [1.0])
        rep = validate(inp, CH15, 1e-4)
        assert rep.valid
        assert rep.capacity_proxy == pytest.approx(secrecy_information(inp, CH15), abs=1e-7)

    def test_pair_at_peak_for_large_amplitude_fails_near_zero(self):
        inp = SymmetricInput(3.0, [3.0], [1.0])
        rep = validate(inp, CH10, 1e-4)
        assert not rep.valid
        assert rep.location_violated and not rep.level_violated
        assert rep.candidate_x < 0.1
        assert xi(0.0, inp, CH10) > xi(3.0, inp, CH10)

    def test_huge_epsilon_always_valid(self):
        inp = SymmetricInput(3.0, [0.0, 1.0, 3.0], [0.1, 0.1, 0.8])
        assert validate(inp, CH10, 1e6).valid

    def test_rejects_nonpositive_epsilon(self):
        with pytest.raises(DomainError):
            validate(SymmetricInput(1.0, [1.0], [1.0]), CH10, 0.0)

    def test_evenness_debug_mode(self):
        inp = SymmetricInput(2.0, [0.0, 2.0], [0.4, 0.6])
        validate(inp, CH10, 1e-4, check_evenness=True)

    def test_report_dict(self):
        d = validate(SymmetricInput(1.0, [1.0], [1.0]), CH10).to_dict()
        assert set(d) >= {"valid", "capacity_proxy", "max_profile_violation", "candidate_x", "support_violations"}

    @settings(max_examples=15, deadline=None)
    @given(symmetric_inputs(max_n=4, max_a=4.0), st.floats(1.2, 20.0))
    def test_report_invariants(self, inp, ratio):
        ch = ChannelPair(1.0, math.sqrt(ratio))
        rep = validate(inp, ch, 1e-4)
        assert 0.0 <= rep.candidate_x <= inp.amplitude
        assert rep.valid == (rep.max_profile_violation <= rep.epsilon and not rep.support_violations)
        # refined candidate dominates every grid sample
        assert xi(rep.candidate_x, inp, ch) >= rep.profile_xi.max() - 1e-9
        if rep.valid:
            assert abs(rep.capacity_proxy - secrecy_information(inp, ch)) <= rep.epsilon + 1e-7


class TestViolatingSet:
    def test_converged_input_is_empty(self):
        inp = run_ba(SymmetricInput(2.0, [0.0, 2.0], [0.5, 0.5]), CH10, 2000)
        assert violating_set(inp, CH10, 1e-4) == []

    def test_equal_channels(self):
        inp = SymmetricInput(2.0, [0.0, 1.3, 2.0], [0.2, 0.3, 0.5])
        assert violating_set(inp, ChannelPair(1.0, 1.0), 1e-4) == []

    def test_conditions_are_independent(self):
        inp = SymmetricInput(3.0, [3.0], [1.0])
        assert violating_set(inp, CH10, 1e-4) == []
        assert not validate(inp, CH10, 1e-4).valid

    def test_off_strip_point_reported(self):
        inp = SymmetricInput(3.0, [0.0, 3.0], [0.5, 0.5])
        vals = xi(np.array([0.0, 3.0]), inp, CH10)
        assert abs(vals[0] - vals[1]) > 1e-4
        assert violating_set(inp, CH10, 1e-4) == [0.0]

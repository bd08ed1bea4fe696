import math
import time

import numpy as np
import pytest

from wiretap.model import ChannelPair, SymmetricInput, secrecy_information
from wiretap.numerics import DomainError
from wiretap.solver import (
    SolverConfig,
    card_lower_bound,
    initial_input,
    solve,
    support_cap,
    sweep,
    warm_start,
)

from oracles import best_small_symmetric

CH10 = ChannelPair(1.0, math.sqrt(10.0))
CH15 = ChannelPair(1.0, math.sqrt(1.5))
FAST = SolverConfig(early_exit=True)


class TestBounds:
    def test_cap_example(self):
        r = (math.sqrt(10) + 1) / (math.sqrt(10) - 1)
        rho = (2 * math.e + 1) ** 2 * r * r + (r + 1) ** 2
        assert r == pytest.approx(1.925, abs=1e-3)
        assert support_cap(CH10, 2.0) == math.ceil(rho * 4 + 10 * math.log(4))
        # the rounded hand value is about 660
        assert support_cap(CH10, 2.0) == pytest.approx(660, rel=0.01)

    def test_cap_floor_and_monotone(self):
        assert support_cap(CH10, 1e-6) >= 3
        caps = [support_cap(CH15, a) for a in np.linspace(0.05, 6, 40)]
        assert caps == sorted(caps)

    def test_cap_needs_degraded(self):
        with pytest.raises(DomainError):
            support_cap(ChannelPair(1.0, 1.0), 1.0)

    def test_lower_bound(self):
        assert card_lower_bound(CH10, 2.0) == pytest.approx(math.sqrt(1 + (8 / (math.pi * math.e)) / 1.4), abs=1e-12)
        assert card_lower_bound(CH10, 2.0) == pytest.approx(1.292, abs=1e-3)
        assert card_lower_bound(CH10, 1e-8) == pytest.approx(1.0, abs=1e-12)
        assert card_lower_bound(CH10, 2.0, 0.0) == card_lower_bound(CH10, 2.0)
        assert card_lower_bound(CH10, 2.0, 0.3) > card_lower_bound(CH10, 2.0)


class TestInitialInput:
    def test_small_amplitude(self):
        inp = initial_input(CH15, 0.5)
        assert inp.half_points.tolist() == [0.0, 0.5]
        assert inp.half_weights.tolist() == pytest.approx([1 / 3, 2 / 3])

    def test_five_point_start(self):
        # pick A so the no-solution bound is 4.2; a quiet eavesdropper caps it lower
        ch = ChannelPair(1.0, 100.0)
        k = (4.2**2 - 1) * math.pi * math.e
        a = math.sqrt(k / (2 - k / ch.sigma2**2))
        assert card_lower_bound(ch, a) == pytest.approx(4.2)
        inp = initial_input(ch, a)
        assert inp.half_points.tolist() == pytest.approx([0.0, a / 2, a])
        assert inp.full_support_size == 5

    def test_always_pinned(self):
        for a in (0.1, 1.0, 3.3, 6.0):
            assert initial_input(CH10, a).is_pinned


class TestWarmStart:
    def test_moves_pin(self):
        prev = SymmetricInput(2.0, [0.0, 1.0, 2.0], [0.2, 0.3, 0.5])
        out = warm_start(prev, 2.05)
        assert out.half_points.tolist() == [0.0, 1.0, 2.05]
        assert out.half_weights.tolist() == prev.half_weights.tolist()


class TestSolve:
    def test_degenerate_channel(self):
        t = time.perf_counter()
        rep = solve(ChannelPair(1.0, 1.0), 2.0)
        assert time.perf_counter() - t < 1e-3
        assert rep.capacity == 0.0 and rep.converged
        assert rep.input.half_points.tolist() == [0.0]

    def test_swapped_channel_is_degenerate(self):
        rep = solve(ChannelPair(math.sqrt(10.0), 1.0), 1.0)
        assert rep.capacity == 0.0 and rep.converged

    def test_rejects_bad_amplitude(self):
        with pytest.raises(DomainError):
            solve(CH10, 0.0)
        with pytest.raises(DomainError):
            solve(CH10, float("nan"))

    def test_small_amplitude_two_point(self):
        rep = solve(CH15, 0.5)
        assert rep.converged
        assert rep.input.half_points.tolist() == [0.5]
        assert rep.input.half_weights.tolist() == [1.0]
        best, a, z = best_small_symmetric(0.5, 1.0, math.sqrt(1.5))
        assert a == pytest.approx(0.5, abs=1e-2) and z < 1e-2
        assert rep.capacity == pytest.approx(best, abs=1e-5)

    def test_zero_limit(self):
        rep = solve(CH10, 1e-2)
        assert rep.converged
        assert 0.0 <= rep.capacity < 1e-4

    @pytest.mark.parametrize("a", [1.0, 2.0, 3.3])
    def test_report_invariants(self, a):
        rep = solve(CH10, a, FAST)
        assert rep.converged and rep.kkt.valid
        assert abs(rep.capacity - rep.secrecy_information) <= rep.kkt.epsilon + 1e-7
        assert rep.capacity <= 0.5 * math.log1p(a * a) - 0.5 * math.log1p(a * a / 10) + 1e-6
        assert rep.capacity <= 0.5 * math.log(10) + 1e-6
        assert math.ceil(rep.card_lower_bound - 1e-12) <= rep.full_support_size <= rep.card_upper_cap
        assert rep.full_support_size >= rep.card_lower_bound_measured - 0.5
        assert rep.secrecy_information == pytest.approx(secrecy_information(rep.input, CH10), abs=1e-12)
        if rep.input.n > 1:
            assert rep.gaps[0] == pytest.approx(a - rep.input.half_points[-2])
        else:
            assert rep.gaps == []

    def test_sizes_grow_across_figure_amplitudes(self):
        sizes = [solve(CH10, a, FAST).full_support_size for a in (2.0, 3.3, 5.55)]
        assert sizes[0] < sizes[1] < sizes[2]

    def test_cap_stops_growth(self):
        cfg = SolverConfig(outer_max=3)
        rep = solve(CH10, 3.0, cfg, init=SymmetricInput(3.0, [3.0], [1.0]))
        assert rep.full_support_size <= rep.card_upper_cap


class TestSweep:
    def test_single_element_matches_solve(self):
        rep = sweep(CH15, [0.5])[0]
        assert rep.capacity == solve(CH15, 0.5).capacity

    def test_rejects_unsorted(self):
        with pytest.raises(DomainError):
            sweep(CH15, [1.0, 0.5])
        with pytest.raises(DomainError):
            sweep(CH15, [])

    def test_capacity_nondecreasing(self):
        reps = sweep(CH15, np.arange(0.25, 1.51, 0.25), FAST)
        caps = [r.capacity for r in reps]
        assert all(r.converged for r in reps)
        assert all(b >= a - 1e-6 for a, b in zip(caps, caps[1:]))


class TestConfig:
    def test_from_flat(self):
        cfg = SolverConfig.from_flat({"epsilon": 1e-3, "n_ba": 10, "delta": 0.2, "panels": 32})
        assert cfg.epsilon == 1e-3 and cfg.ascent.n_ba == 10
        assert cfg.policy.delta == 0.2 and cfg.quad.panels == 32

    def test_from_flat_rejects_unknown(self):
        with pytest.raises(DomainError):
            SolverConfig.from_flat({"bogus": 1})

    def test_rejects_bad_values(self):
        with pytest.raises(DomainError):
            SolverConfig(epsilon=0.0)

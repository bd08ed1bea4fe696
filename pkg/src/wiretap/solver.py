"""Outer solver loop, cardinality bounds and amplitude sweeps."""

from __future__ import annotations

import logging
import math
import time
import dataclasses
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from wiretap import kkt as kkt_mod
from wiretap.kkt import KktReport
from wiretap.model import (
    DEFAULT_QUAD,
    ChannelPair,
    SymmetricInput,
    gaussian_input_mi,
    input_variance,
    mutual_information,
    secrecy_information,
)
from wiretap.numerics import DomainError, NumericalError, QuadratureSettings
from wiretap.optimizer import AscentParams, ascend, gradient_check, run_ba
from wiretap.support_update import RESET, UpdatePolicy, choose_update, cluster, prune, update, zero_split_location

log = logging.getLogger(__name__)

CAP_LOG_SLACK = 10.0
SPLIT_RISE = 1e-10


class SolverError(RuntimeError):
    """A numerical failure inside the solver, tagged with where it happened."""

    def __init__(self, message: str, outer: int, inner: int, phase: str):
        super().__init__(f"{message} (outer pass {outer}, inner iteration {inner}, phase {phase})")
        self.outer = outer
        self.inner = inner
        self.phase = phase


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float = kkt_mod.DEFAULT_EPSILON
    ascent: AscentParams = AscentParams()
    policy: UpdatePolicy = UpdatePolicy()
    inner_loops: int = 100
    outer_max: int = 50
    grid_step: Optional[float] = None  # None -> min(sigma1, A)/50
    quad: QuadratureSettings = DEFAULT_QUAD
    early_exit: bool = False
    early_exit_tol: float = 1e-12
    gradient_check_every: int = 0  # 0 -> first outer pass only; k -> every k-th pass
    zero_split: bool = True

    def __post_init__(self):
        if self.epsilon <= 0:
            raise DomainError("epsilon must be positive")
        if self.inner_loops < 1 or self.outer_max < 1:
            raise DomainError("inner_loops and outer_max must be positive")
        if self.grid_step is not None and self.grid_step <= 0:
            raise DomainError("grid_step must be positive")

    def grid_step_for(self, sigma1: float, amplitude: float) -> float:
        if self.grid_step is not None:
            return self.grid_step
        return kkt_mod.default_grid_step(sigma1, amplitude)

    @classmethod
    def from_flat(cls, values: dict) -> "SolverConfig":
        """Build from a flat mapping of field names (nested fields by their own names)."""
        ascent_keys = set(AscentParams.__dataclass_fields__)
        policy_keys = set(UpdatePolicy.__dataclass_fields__)
        quad_keys = set(QuadratureSettings.__dataclass_fields__)
        own_keys = set(cls.__dataclass_fields__) - {"ascent", "policy", "quad"}
        unknown = set(values) - ascent_keys - policy_keys - quad_keys - own_keys
        if unknown:
            raise DomainError(f"unknown configuration keys: {sorted(unknown)}")
        pick = lambda keys: {k: v for k, v in values.items() if k in keys}
        return cls(
            ascent=AscentParams(**pick(ascent_keys)),
            policy=UpdatePolicy(**pick(policy_keys)),
            quad=QuadratureSettings(**pick(quad_keys)),
            **pick(own_keys),
        )


@dataclass(frozen=True, eq=False)
class SolveReport:
    amplitude: float
    channel: ChannelPair
    capacity: float
    input: SymmetricInput
    kkt: Optional[KktReport]
    mi_legit: float
    mi_eve: float
    secrecy_information: float
    gaussian_mi_eve: float
    input_variance: float
    full_support_size: int
    card_lower_bound: float
    card_lower_bound_measured: float
    card_upper_cap: int
    outer_iterations: int = 0
    cluster_events: int = 0
    update_events: int = 0
    reset_events: int = 0
    converged: bool = False
    near_transition: bool = False
    cap_reached: bool = False
    bound_warning: bool = False
    gradient_check_error: Optional[float] = None
    error: Optional[str] = None
    elapsed: float = field(default=0.0, compare=False)

    @property
    def gaps(self) -> list[float]:
        """Distances between adjacent half-points, starting from the peak."""
        return (-np.diff(self.input.half_points[::-1])).tolist()

    def to_dict(self) -> dict:
        return {
            "amplitude": self.amplitude,
            "sigma1": self.channel.sigma1,
            "sigma2": self.channel.sigma2,
            "capacity_nats": self.capacity,
            "converged": self.converged,
            "secrecy_information": self.secrecy_information,
            "mi_legit": self.mi_legit,
            "mi_eve": self.mi_eve,
            "gaussian_mi_eve": self.gaussian_mi_eve,
            "input_variance": self.input_variance,
            "half_points": self.input.half_points.tolist(),
            "half_weights": self.input.half_weights.tolist(),
            "full_support_size": self.full_support_size,
            "card_lower_bound": self.card_lower_bound,
            "card_lower_bound_measured": self.card_lower_bound_measured,
            "card_upper_cap": self.card_upper_cap,
            "outer_iterations": self.outer_iterations,
            "cluster_events": self.cluster_events,
            "update_events": self.update_events,
            "reset_events": self.reset_events,
            "near_transition": self.near_transition,
            "cap_reached": self.cap_reached,
            "bound_warning": self.bound_warning,
            "gradient_check_error": self.gradient_check_error,
            "error": self.error,
            "kkt": None if self.kkt is None else self.kkt.to_dict(),
        }


def _rho(ch: ChannelPair) -> float:
    r = (ch.sigma2 + ch.sigma1) / (ch.sigma2 - ch.sigma1)
    return (2 * math.e + 1) ** 2 * r**2 + (r + 1) ** 2


def support_cap(ch: ChannelPair, amplitude: float) -> int:
    """Upper cap on the full support size: rho A^2/s1^2 + 10 log(2 + A), at least 3."""
    if not ch.degraded:
        raise DomainError("support cap requires sigma1 < sigma2")
    val = _rho(ch) * amplitude**2 / ch.sigma1**2 + CAP_LOG_SLACK * math.log(2.0 + amplitude)
    return max(3, math.ceil(val))


def card_lower_bound(ch: ChannelPair, amplitude: float, mi_eve: float = 0.0) -> float:
    """Lower bound on the full support size; with mi_eve = 0 the weaker bound that needs no solution."""
    if mi_eve < 0:
        raise DomainError("mi_eve must be nonnegative")
    a2 = amplitude**2
    snr_term = (2 * a2 / (math.pi * math.e * ch.sigma1**2)) / (1 + a2 / ch.sigma2**2)
    return math.sqrt(1 + snr_term * math.exp(mi_eve))


def initial_input(ch: ChannelPair, amplitude: float) -> SymmetricInput:
    """Equally spaced half-points on [0, A] with equal full-support mass.

    The count is the smallest number of half-points including 0 whose full
    support reaches the no-solution cardinality bound, and at least 2.
    """
    if not ch.degraded or amplitude <= 0:
        raise DomainError("initial input requires sigma1 < sigma2 and A > 0")
    full = math.ceil(card_lower_bound(ch, amplitude) - 1e-12)
    n0 = max(2, math.ceil((full + 1) / 2))
    pts = np.linspace(0.0, amplitude, n0)
    mult = np.where(pts == 0.0, 1.0, 2.0)
    return SymmetricInput(amplitude, pts, mult / mult.sum())


def warm_start(prev: SymmetricInput, amplitude: float) -> SymmetricInput:
    """Keep the previous interior points and weights, move the peak to the new A."""
    x = np.minimum(prev.half_points.copy(), amplitude)
    x[-1] = amplitude
    return SymmetricInput(amplitude, np.sort(x), prev.half_weights[np.argsort(x, kind="stable")])


def _degenerate_report(ch: ChannelPair, amplitude: float, t0: float) -> SolveReport:
    inp = SymmetricInput.point_mass(amplitude)
    return SolveReport(
        amplitude=amplitude, channel=ch, capacity=0.0, input=inp, kkt=None,
        mi_legit=0.0, mi_eve=0.0, secrecy_information=0.0, gaussian_mi_eve=0.0,
        input_variance=0.0, full_support_size=1, card_lower_bound=1.0,
        card_lower_bound_measured=1.0, card_upper_cap=1, converged=True,
        elapsed=time.perf_counter() - t0,
    )


def _stationary(before: SymmetricInput, after: SymmetricInput, tol: float) -> bool:
    if before.n != after.n:
        return False
    return bool(np.max(np.abs(before.half_points - after.half_points)) <= tol
                and np.max(np.abs(before.half_weights - after.half_weights)) <= tol)


def solve(ch: ChannelPair, amplitude: float, cfg: SolverConfig = SolverConfig(),
          init: Optional[SymmetricInput] = None) -> SolveReport:
    """Capacity and optimal half-support input for one amplitude.

    Alternates probability updates and location ascent, clusters, validates
    against the eps-KKT conditions and updates the support until validation
    passes or ``cfg.outer_max`` passes are spent.  The reported capacity is
    Xi(A) of the final input.

    A converged input with a point at 0 is only kept when Xi peaks at 0.  If
    Xi rises away from 0 the point is split into a pair and the solve is
    repeated once from there; the split result wins if it converges without
    losing secrecy information.
    """
    t0 = time.perf_counter()
    if not (math.isfinite(amplitude) and amplitude > 0):
        raise DomainError(f"amplitude must be positive, got {amplitude!r}")
    if not ch.degraded:
        return _degenerate_report(ch, amplitude, t0)
    rep = _solve(ch, amplitude, cfg, init, t0)
    if not (cfg.zero_split and rep.converged and rep.input.has_zero and rep.input.n >= 2):
        return rep
    vals = rep.kkt.profile_xi
    if vals.size < 3 or vals[1] <= vals[0] + SPLIT_RISE:
        return rep
    loc = zero_split_location(rep.input, rep.kkt, cfg.policy)
    if loc is None:
        return rep
    base = rep.input

    def split_at(a: float) -> SymmetricInput:
        x = base.half_points.copy()
        x[0] = a
        order = np.argsort(x, kind="stable")
        return SymmetricInput(amplitude, x[order], base.half_weights[order])

    loc, _ = kkt_mod.golden_section_max(lambda a: secrecy_information(split_at(a), ch, cfg.quad),
                                        cfg.policy.min_dist, loc, tol=1e-4)
    trial = _solve(ch, amplitude, cfg, split_at(loc), t0)
    log.info("A=%.4g zero split to %.4g: %.10f -> %.10f", amplitude, loc,
             rep.secrecy_information, trial.secrecy_information)
    if trial.converged and trial.secrecy_information >= rep.secrecy_information - 1e-12:
        return dataclasses.replace(
            trial,
            outer_iterations=rep.outer_iterations + trial.outer_iterations,
            cluster_events=rep.cluster_events + trial.cluster_events,
            update_events=rep.update_events + trial.update_events + 1,
            reset_events=rep.reset_events + trial.reset_events,
            elapsed=time.perf_counter() - t0,
        )
    return dataclasses.replace(rep, elapsed=time.perf_counter() - t0)


def _solve(ch: ChannelPair, amplitude: float, cfg: SolverConfig,
           init: Optional[SymmetricInput], t0: float) -> SolveReport:

    quad = cfg.quad
    cap = support_cap(ch, amplitude)
    grid_step = cfg.grid_step_for(ch.sigma1, amplitude)
    inp = initial_input(ch, amplitude) if init is None else init
    if inp.amplitude != amplitude or not inp.is_pinned:
        inp = warm_start(inp, amplitude)
    inp = cluster(inp, cfg.policy)

    counters = {"cluster": 0, "update": 0, "reset": 0}
    report: Optional[KktReport] = None
    converged = cap_reached = near_transition = False
    grad_err = None
    ba_tol = cfg.early_exit_tol if cfg.early_exit else 0.0
    outer = 0
    for outer in range(1, cfg.outer_max + 1):
        k = 0
        phase = "ba"
        try:
            while k < cfg.inner_loops:
                k += 1
                before = inp
                phase = "ba"
                inp = run_ba(inp, ch, cfg.ascent.n_ba, quad, tol=ba_tol)
                phase = "ascent"
                inp = ascend(inp, ch, cfg.ascent, quad)
                if cfg.early_exit and _stationary(before, inp, cfg.early_exit_tol):
                    break
            every = cfg.gradient_check_every
            if (every == 0 and outer == 1) or (every > 0 and outer % every == 0):
                phase = "gradient-check"
                grad_err = gradient_check(inp, ch, quad=quad)
                if grad_err > cfg.ascent.fd_check_tol:
                    log.warning("gradient self-check gap %.3e exceeds %.1e", grad_err, cfg.ascent.fd_check_tol)
            phase = "cluster"
            clustered = cluster(prune(inp, cfg.policy), cfg.policy)
            fired = clustered.n != inp.n
            counters["cluster"] += int(fired)
            inp = clustered
            phase = "validate"
            report = kkt_mod.validate(inp, ch, cfg.epsilon, grid_step, quad)
        except (NumericalError, FloatingPointError) as exc:
            raise SolverError(str(exc), outer, k, phase) from exc
        log.info("A=%.4g pass %d: n=%d proxy=%.8f violation=%.2e support_dev=%d",
                 amplitude, outer, inp.n, report.capacity_proxy,
                 report.max_profile_violation, len(report.support_violations))
        if report.valid:
            converged = True
            near_transition = fired
            break
        branch, _ = choose_update(inp, report, cfg.policy)
        candidate = update(inp, report, cfg.policy)
        if candidate.full_support_size > cap:
            cap_reached = True
            log.warning("support cap %d reached at A=%.4g", cap, amplitude)
            break
        counters["update"] += 1
        counters["reset"] += int(branch == RESET)
        inp = candidate

    return _finish(ch, amplitude, inp, report, cap, outer, counters, converged,
                   near_transition, cap_reached, grad_err, quad, t0)


def _finish(ch, amplitude, inp, report, cap, outer, counters, converged, near_transition,
            cap_reached, grad_err, quad, t0) -> SolveReport:
    mi1 = mutual_information(inp, ch.sigma1, quad)
    mi2 = mutual_information(inp, ch.sigma2, quad)
    var = input_variance(inp)
    lb = card_lower_bound(ch, amplitude)
    lb_measured = card_lower_bound(ch, amplitude, mi2)
    size = inp.full_support_size
    warn = converged and size < lb_measured - 0.5
    if warn:
        log.warning("support size %d is below the cardinality floor %.3f at A=%.4g", size, lb_measured, amplitude)
    return SolveReport(
        amplitude=amplitude,
        channel=ch,
        capacity=report.capacity_proxy,
        input=inp,
        kkt=report,
        mi_legit=mi1,
        mi_eve=mi2,
        secrecy_information=mi1 - mi2,
        gaussian_mi_eve=gaussian_input_mi(var, ch.sigma2),
        input_variance=var,
        full_support_size=size,
        card_lower_bound=lb,
        card_lower_bound_measured=lb_measured,
        card_upper_cap=cap,
        outer_iterations=outer,
        cluster_events=counters["cluster"],
        update_events=counters["update"],
        reset_events=counters["reset"],
        converged=converged,
        near_transition=near_transition,
        cap_reached=cap_reached,
        bound_warning=warn,
        gradient_check_error=grad_err,
        elapsed=time.perf_counter() - t0,
    )


def sweep(ch: ChannelPair, amplitudes: Sequence[float], cfg: SolverConfig = SolverConfig()) -> list[SolveReport]:
    """Solve for increasing amplitudes, warm-starting each from the last converged input."""
    a = [float(v) for v in amplitudes]
    if not a:
        raise DomainError("no amplitudes given")
    if any(b <= c for c, b in zip(a, a[1:])):
        raise DomainError("amplitudes must be strictly increasing")
    reports: list[SolveReport] = []
    prev: Optional[SymmetricInput] = None
    for amp in a:
        try:
            rep = solve(ch, amp, cfg, init=None if prev is None else warm_start(prev, amp))
        except (SolverError, DomainError) as exc:
            log.error("solve failed at A=%.4g: %s", amp, exc)
            rep = _failed_report(ch, amp, str(exc))
        reports.append(rep)
        if rep.converged and rep.error is None and ch.degraded:
            prev = rep.input
    return reports


def _failed_report(ch: ChannelPair, amplitude: float, message: str) -> SolveReport:
    nan = float("nan")
    return SolveReport(
        amplitude=amplitude, channel=ch, capacity=nan, input=SymmetricInput.point_mass(amplitude),
        kkt=None, mi_legit=nan, mi_eve=nan, secrecy_information=nan, gaussian_mi_eve=nan,
        input_variance=nan, full_support_size=0, card_lower_bound=nan,
        card_lower_bound_measured=nan, card_upper_cap=0, converged=False, error=message,
    )

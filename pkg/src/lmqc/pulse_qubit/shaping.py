"""Coupling schedules that emit or absorb a target wavepacket.

A qubit with decay rate kappa(t) into the phonon channel, starting excited,
emits ``sqrt(kappa(t)) exp(-1/2 int kappa)``. Inverting that relation gives
the schedule for a desired envelope; the time-reversed rule catches one.
Rates are in ns^-1, times in ns and lifetimes in us.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ParameterError
from ..temporal_mode import TimeGrid, Wavepacket, compose_bins, make_sech, overlap

# Fastest emission time of the tunable coupler.
MIN_EMISSION_TIME_NS = 14.0
DEFAULT_KAPPA_MAX = 1.0 / MIN_EMISSION_TIME_NS
_TINY = 1e-12


@dataclass(frozen=True)
class QubitParams:
    f_op: float = 3.925  # GHz
    T1: float = math.inf  # us
    T2_ramsey: float = math.inf  # us
    T2_echo: float = math.inf  # us

    def __post_init__(self):
        if not self.T1 > 0:
            raise ParameterError(f"T1 must be positive, got {self.T1}")
        for t2 in (self.T2_ramsey, self.T2_echo):
            if not t2 > 0 or t2 > 2 * self.T1 * (1 + 1e-12):
                raise ParameterError(f"T2={t2} us violates 0 < T2 <= 2 T1 (T1={self.T1} us)")

    @property
    def relaxation_rate(self) -> float:
        """1/T1 in ns^-1."""
        return 0.0 if math.isinf(self.T1) else 1e-3 / self.T1

    def dephasing_rate(self, kind: str = "ramsey") -> float:
        """Pure dephasing rate 1/T2 - 1/(2 T1) in ns^-1."""
        t2 = {"ramsey": self.T2_ramsey, "echo": self.T2_echo}[kind]
        inv_t2 = 0.0 if math.isinf(t2) else 1.0 / t2
        inv_2t1 = 0.0 if math.isinf(self.T1) else 0.5 / self.T1
        return max(0.0, inv_t2 - inv_2t1) * 1e-3


Q1_PARAMS = QubitParams(3.925, 26.7, 3.0, 11.2)
Q2_PARAMS = QubitParams(3.925, 22.0, 3.4, 9.4)
IDEAL_QUBIT = QubitParams()


@dataclass(frozen=True)
class ChannelGeometry:
    """One-way Q-to-beamsplitter travel times and the lumped phonon lifetime, all in us."""

    t_travel_1: float = 0.225
    t_travel_2: float = 0.30
    tau_ph: float = 1.3

    def __post_init__(self):
        if min(self.t_travel_1, self.t_travel_2, self.tau_ph) <= 0:
            raise ParameterError("travel times and phonon lifetime must be positive")

    def survival(self, t_us: float) -> float:
        return 1.0 if math.isinf(self.tau_ph) else math.exp(-t_us / self.tau_ph)

    @property
    def survival_1(self) -> float:
        return self.survival(self.t_travel_1)

    @property
    def survival_2(self) -> float:
        return self.survival(self.t_travel_2)

    @classmethod
    def lossless(cls, t_travel_1: float = 0.225, t_travel_2: float = 0.30) -> ChannelGeometry:
        return cls(t_travel_1, t_travel_2, math.inf)


@dataclass(frozen=True)
class CouplerSchedule:
    grid: TimeGrid
    kappa: np.ndarray = field(repr=False)
    kappa_max: float = DEFAULT_KAPPA_MAX

    def __post_init__(self):
        k = np.asarray(self.kappa, dtype=float).reshape(-1)
        if k.shape[0] != self.grid.n_samples:
            raise ParameterError("schedule length does not match its grid")
        if not np.all(np.isfinite(k)) or np.any(k < 0):
            raise ParameterError("coupling rates must be finite and non-negative")
        if np.any(k > self.kappa_max * (1 + 1e-12)):
            raise ParameterError(f"coupling exceeds kappa_max={self.kappa_max}")
        k.setflags(write=False)
        object.__setattr__(self, "kappa", k)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def shifted(self, dt_ns: float) -> CouplerSchedule:
        g = self.grid
        return CouplerSchedule(TimeGrid(g.t_start + dt_ns, g.dt, g.n_samples), self.kappa, self.kappa_max)

    def at(self, t) -> np.ndarray:
        """Rate at arbitrary times; zero outside the schedule."""
        return np.interp(t, self.times, self.kappa, left=0.0, right=0.0)

    def integrated(self) -> np.ndarray:
        """Cumulative ``int kappa dt`` by the trapezoid rule."""
        k = self.kappa
        out = np.zeros_like(k)
        out[1:] = np.cumsum(0.5 * (k[1:] + k[:-1])) * self.grid.dt
        return out


def _cum_before(intensity: np.ndarray, dt: float) -> np.ndarray:
    """Mass strictly before each sample plus half of the sample itself."""
    c = np.cumsum(intensity) * dt
    return c - 0.5 * intensity * dt


def _ideal_emission_rates(phi: Wavepacket) -> np.ndarray:
    I = phi.intensity()
    remaining = 1.0 - _cum_before(I, phi.grid.dt)
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.where(remaining > _TINY, I / np.maximum(remaining, _TINY), np.inf)
    return k


def emitted_waveform(schedule: CouplerSchedule) -> tuple[Wavepacket, float]:
    """Waveform released by an initially excited qubit, and the emitted fraction."""
    K = schedule.integrated()
    fraction = 1.0 - math.exp(-K[-1])
    if fraction < 1e-12:
        raise ParameterError("schedule emits nothing")
    amp = np.sqrt(schedule.kappa) * np.exp(-0.5 * K)
    return Wavepacket(schedule.grid, amp, "emitted"), fraction


def kappa_for_emission(phi: Wavepacket, kappa_max: float = DEFAULT_KAPPA_MAX,
                       min_fidelity: float = 0.9) -> CouplerSchedule:
    """Rate ``|phi|^2 / int_t^inf |phi|^2`` clipped at ``kappa_max``.

    Once clipped the coupler stays at its cap, dumping whatever population is
    left. Rejects targets whose achievable mode fidelity (overlap squared times
    emitted fraction) falls below ``min_fidelity``.
    """
    if not kappa_max > 0:
        raise ParameterError("kappa_max must be positive")
    k = np.minimum(_ideal_emission_rates(phi), kappa_max)
    sched = CouplerSchedule(phi.grid, k, kappa_max)
    _check_achievable(sched, phi, min_fidelity)
    return sched


def _check_achievable(sched: CouplerSchedule, phi: Wavepacket, min_fidelity: float) -> None:
    env = Wavepacket(phi.grid, np.abs(phi.amplitude))
    wave, frac = emitted_waveform(sched)
    fid = abs(overlap(env, wave)) ** 2 * frac
    if fid < min_fidelity:
        raise ParameterError(
            f"kappa_max={sched.kappa_max:.4g} ns^-1 cannot shape {phi.label or 'target'}: "
            f"achievable fidelity {fid:.3f} < {min_fidelity}"
        )


def kappa_for_catch(phi: Wavepacket, kappa_max: float = DEFAULT_KAPPA_MAX,
                    min_fidelity: float = 0.9) -> CouplerSchedule:
    """Time-reversed emission rule ``|phi|^2 / int_-inf^t |phi|^2``, clipped."""
    if not kappa_max > 0:
        raise ParameterError("kappa_max must be positive")
    I = phi.intensity()
    before = _cum_before(I, phi.grid.dt)
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.where(before > _TINY, I / np.maximum(before, _TINY), 0.0)
    k = np.minimum(k, kappa_max)
    sched = CouplerSchedule(phi.grid, k, kappa_max)
    # achievable catch fidelity equals that of emitting the time-reversed packet
    rev = Wavepacket(phi.grid, np.abs(phi.amplitude[::-1]))
    _check_achievable(CouplerSchedule(phi.grid, k[::-1], kappa_max), rev, min_fidelity)
    return sched


def time_bin_target(sigma: float, bin_times, weights, grid: TimeGrid,
                    max_bin_overlap: float = 1e-2) -> Wavepacket:
    """Two sech bins of width ``sigma`` centered at ``bin_times`` with amplitude weights."""
    if len(bin_times) != 2 or len(weights) != 2:
        raise ParameterError("exactly two time bins are supported")
    w = np.asarray(weights, dtype=complex)
    if abs(np.sum(np.abs(w) ** 2) - 1.0) > 1e-9:
        raise ParameterError("bin weights must satisfy |w1|^2 + |w2|^2 = 1")
    bins = [make_sech(sigma, t, grid, f"bin{i + 1}") for i, t in enumerate(bin_times)]
    if abs(overlap(bins[0], bins[1])) > max_bin_overlap:
        raise ParameterError(
            f"time bins at {bin_times} ns overlap by {abs(overlap(bins[0], bins[1])):.3g}; separate them further"
        )
    nonzero = [(b, c) for b, c in zip(bins, w) if abs(c) > 0]
    return compose_bins([b for b, _ in nonzero], [c for _, c in nonzero], "time-bin")


def time_bin_schedule(sigma: float, weights, bin_times, grid: TimeGrid,
                      kappa_max: float = DEFAULT_KAPPA_MAX) -> CouplerSchedule:
    """Schedule releasing ``|w1|^2`` of the excitation in bin 1 and the rest in bin 2.

    Only bin magnitudes are set by the coupler; a relative bin phase has to be
    imprinted on the qubit between the bins.
    """
    target = time_bin_target(sigma, bin_times, np.abs(np.asarray(weights, dtype=complex)), grid)
    return kappa_for_emission(target, kappa_max)

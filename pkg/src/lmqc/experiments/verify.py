"""Self-check suite: oracle equivalence and invariants with explicit tolerances.

Library functions are looked up through their modules at call time so a
patched implementation is what gets checked.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .. import measure, oracle, scatter, temporal_mode
from ..pulse_qubit import shaping


@dataclass
class CheckResult:
    name: str
    value: float
    target: float
    tolerance: float
    detail: str = ""

    @property
    def error(self) -> float:
        return abs(self.value - self.target)

    @property
    def passed(self) -> bool:
        return bool(self.error <= self.tolerance)

    @property
    def margin(self) -> float:
        return self.tolerance - self.error

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = (f"[{status}] {self.name}: value={self.value:.10g} target={self.target:.10g} "
                f"tol={self.tolerance:.1e} margin={self.margin:.2e}")
        return text + (f" ({self.detail})" if self.detail else "")


def _sech_pair(s1, s2, tau=0.0, dt=0.1):
    grid = temporal_mode.common_grid([s1, s2], [0.0, 0.0], dt, pad=abs(tau))
    return temporal_mode.make_sech(s1, 0.0, grid), temporal_mode.make_sech(s2, 0.0, grid)


def check_p11_far() -> CheckResult:
    phi1, phi2 = _sech_pair(8.4, 8.3, 400)
    v = scatter.coincidence_probability_time(phi1, phi2, 400.0, 0.61)
    return CheckResult("p11_far_delay", v, 0.524, 1e-3, "eta=0.61, tau=400 ns")


def check_p11_zero() -> CheckResult:
    phi1, _ = _sech_pair(8.4, 8.4)
    v = scatter.coincidence_probability_time(phi1, phi1, 0.0, 0.61)
    return CheckResult("p11_zero_delay", v, 0.048, 1e-3, "eta=0.61, identical packets")


def check_oracle_equivalence(n: int = 60, seed: int = 7) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        s1, s2 = rng.uniform(5, 50, 2)
        tau = round(rng.uniform(-100, 100), 1)
        eta = rng.uniform(0.05, 0.95)
        phi1, phi2 = _sech_pair(s1, s2, tau, dt=0.2)
        a = scatter.coincidence_probability_time(phi1, phi2, tau, eta)
        b = oracle.brute_force_p11(phi1, phi2, tau, eta)
        worst = max(worst, abs(a - b))
    return CheckResult("oracle_equivalence", worst, 0.0, 1e-9, f"{n} random instances, max |diff|")


def check_time_freq() -> CheckResult:
    worst = 0.0
    for tau, df in ((0.0, 0.0), (12.0, 0.0), (0.0, 7.0), (-20.0, 3.0)):
        phi1, phi2 = _sech_pair(16.0, 16.7, tau)
        phi2 = temporal_mode.detuned(phi2, df)
        a = scatter.coincidence_probability_time(phi1, phi2, tau, 0.61, method="fft")
        b = scatter.coincidence_probability_freq(temporal_mode.spectrum(phi1), temporal_mode.spectrum(phi2), tau, 0.61)
        worst = max(worst, abs(a - b))
    return CheckResult("time_vs_frequency", worst, 0.0, 1e-9, "max |diff| over 4 settings")


def check_sech_overlap() -> CheckResult:
    worst = 0.0
    for tau in (5.0, 20.0, 60.0):
        phi, _ = _sech_pair(10.0, 10.0, tau)
        x = tau / 20.0
        worst = max(worst, abs(abs(temporal_mode.overlap(temporal_mode.delayed(phi, tau), phi)) - x / math.sinh(x)))
    return CheckResult("sech_overlap_closed_form", worst, 0.0, 1e-6, "|<phi(t-tau)|phi>| vs x/sinh x")


def check_quadrature() -> CheckResult:
    phi1, phi2 = _sech_pair(8.8, 43.3)
    a = abs(temporal_mode.overlap(phi1, phi2))
    b = abs(oracle.quadrature_overlap(oracle.AnalyticSech(8.8), oracle.AnalyticSech(43.3)))
    return CheckResult("grid_vs_quadrature", abs(a - b), 0.0, 1e-6, "sigma 8.8 vs 43.3 ns")


def check_bs_unitarity() -> CheckResult:
    worst = 0.0
    for eta in (0.1, 0.5, 0.611, 0.9):
        u = scatter.fock_lift(scatter.bs_mode_matrix(scatter.Beamsplitter(eta)), 2)
        worst = max(worst, float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))))
    return CheckResult("bs_unitarity", worst, 0.0, 1e-12, "Fock lift up to 2 quanta")


def check_loss_binomial() -> CheckResult:
    worst = 0.0
    for s in (0.3, 0.7, 0.95):
        for n in (1, 2):
            state = scatter.apply_loss(scatter.TwoModeFockDensity.fock(n, 0), scatter.LossChannel(s, 1.0))
            ref = oracle.loss_trace_oracle(n, s)
            for k in range(3):
                worst = max(worst, abs(state.populations().get((k, 0), 0.0) - ref.get(k, 0.0)))
    return CheckResult("loss_vs_environment_oracle", worst, 0.0, 1e-12, "binomial thinning")


def check_emission_round_trip() -> CheckResult:
    grid = temporal_mode.sech_grid(17.9, 0.0)
    phi = temporal_mode.make_sech(17.9, 0.0, grid)
    wave, _ = shaping.emitted_waveform(shaping.kappa_for_emission(phi))
    return CheckResult("emission_round_trip", abs(temporal_mode.overlap(phi, wave)), 1.0, 1e-3, "sigma=17.9 ns")


def check_readout_round_trip() -> CheckResult:
    v = measure.DEVICE_VISIBILITY
    worst = 0.0
    for k in range(4):
        e = np.eye(4)[k]
        worst = max(worst, float(np.max(np.abs(measure.correct_readout(measure.apply_confusion(e, v), v).as_array() - e))))
    return CheckResult("readout_round_trip", worst, 0.0, 1e-9, "V^-1 V on basis vectors")


CHECKS: dict[str, Callable[[], CheckResult]] = {
    "p11_far_delay": check_p11_far,
    "p11_zero_delay": check_p11_zero,
    "oracle_equivalence": check_oracle_equivalence,
    "time_vs_frequency": check_time_freq,
    "sech_overlap_closed_form": check_sech_overlap,
    "grid_vs_quadrature": check_quadrature,
    "bs_unitarity": check_bs_unitarity,
    "loss_vs_environment_oracle": check_loss_binomial,
    "emission_round_trip": check_emission_round_trip,
    "readout_round_trip": check_readout_round_trip,
}


def run_checks(name_filter: str | None = None, echo: Callable[[str], None] | None = print) -> list[CheckResult]:
    results = []
    for name, fn in CHECKS.items():
        if name_filter and name_filter not in name:
            continue
        try:
            r = fn()
        except Exception as exc:  # a crashing check is a failed check
            r = CheckResult(name, math.nan, 0.0, 0.0, f"raised {type(exc).__name__}: {exc}")
        results.append(r)
        if echo:
            echo(r.line())
    return results

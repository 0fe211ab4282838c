"""One test per acceptance criterion; each prints a PASS/FAIL line before asserting."""
import math
import time

import numpy as np
import pytest

from lmqc import measure
from lmqc.experiments import scenarios, verify
from lmqc.experiments.config import ScenarioConfig
from lmqc.oracle import brute_force_p11
from lmqc.pulse_qubit.cascade import CascadeConfig, Emitter, InputMode, JointState, OutputMode, simulate_cascade
from lmqc.pulse_qubit.pipeline import hom_pipeline
from lmqc.pulse_qubit.shaping import emitted_waveform, kappa_for_catch, kappa_for_emission
from lmqc.scatter import coincidence_probability_time, eta_from_s_params, read_sparams_csv, synthetic_sparams, write_sparams_csv
from lmqc.temporal_mode import TimeGrid, common_grid, make_sech

SIGMA = 8.4


@pytest.fixture
def report(capsys):
    def emit(number: int, title: str, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:>2} {title}: {detail}")
    return emit


def run_scenario(name, **params):
    t0 = time.perf_counter()
    table = scenarios.run(ScenarioConfig(name, params))
    return table, time.perf_counter() - t0


def test_c01_coincidence_endpoints(report):
    t0 = time.perf_counter()
    grid = common_grid([SIGMA, SIGMA], [0.0, 0.0], pad=10 * SIGMA)
    phi = make_sech(SIGMA, 0.0, grid)
    far = coincidence_probability_time(phi, phi, 10 * SIGMA, 0.611)
    zero = coincidence_probability_time(phi, phi, 0.0, 0.611)
    dt = time.perf_counter() - t0
    ok = abs(far - 0.524) <= 1e-3 and abs(zero - 0.048) <= 1e-3 and dt < 1
    report(1, "P11 endpoints at eta=0.611", ok,
           f"P11(10 sigma)={far:.5f} (target 0.524), P11(0)={zero:.5f} (target 0.048), tol 1e-3, {dt:.2f}s")
    assert far == pytest.approx(0.524, abs=1e-3)
    assert zero == pytest.approx(0.048, abs=1e-3)
    assert dt < 1


def test_c02_theory_visibility(report):
    table, dt = run_scenario("hom_delay_scan", tau_points=41)
    vis = float(table.metadata["dip_visibility"])
    ok = abs(vis - 0.908) <= 1e-3 and dt < 10 and len(table.rows) == 41
    report(2, "HOM visibility from delay scan", ok, f"V={vis:.5f} (target 0.908, tol 1e-3), {dt:.2f}s")
    assert vis == pytest.approx(0.908, abs=1e-3)
    assert dt < 10


def test_c03_oracle_equivalence(report):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        s1, s2 = rng.uniform(5, 50, size=2)
        tau = rng.uniform(-100, 100)
        eta = rng.uniform(0.05, 0.95)
        grid = common_grid([s1, s2], [0.0, 0.0], pad=abs(tau))
        a, b = make_sech(s1, 0.0, grid), make_sech(s2, 0.0, grid)
        worst = max(worst, abs(brute_force_p11(a, b, tau, eta) - coincidence_probability_time(a, b, tau, eta)))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-9 and dt < 30
    report(3, "brute-force oracle vs closed form", ok, f"max |diff| over 200 draws = {worst:.2e} (tol 1e-9), {dt:.2f}s")
    assert worst <= 1e-9
    assert dt < 30


def test_c04_frequency_fwhm(report):
    table, dt = run_scenario("hom_freq_scan")
    w = float(table.metadata["fwhm_mhz"])
    ok = abs(w - 9.5) <= 0.5 and dt < 10
    report(4, "frequency-scan dip width", ok, f"FWHM={w:.4f} MHz (target 9.5 +- 0.5), {dt:.2f}s")
    assert w == pytest.approx(9.5, abs=0.5)
    assert dt < 10


def test_c05_width_scan(report):
    table, _ = run_scenario("hom_width_scan")
    ratios = table.column("sigma_ratio")
    grid_v = table.column("visibility_grid")
    quad_v = table.column("visibility_quadrature")
    dev = max(abs(a - b) for a, b in zip(grid_v, quad_v))
    scan, _ = run_scenario("hom_delay_scan", tau_points=41)
    c2 = float(scan.metadata["dip_visibility"])
    assert ratios == pytest.approx([1.0, 2.125, 3.284, 4.136, 4.920], abs=1e-3)
    ok = dev <= 1e-6 and abs(grid_v[0] - c2) <= 1e-3
    report(5, "width-scan visibilities", ok,
           f"max grid-vs-quadrature diff {dev:.2e} (tol 1e-6); ratio 1 gives {grid_v[0]:.5f} vs delay scan {c2:.5f}")
    assert dev <= 1e-6
    assert grid_v[0] == pytest.approx(c2, abs=1e-3)


def test_c06_full_experiment_hom(report):
    table, dt = run_scenario("hom_delay_scan", tau_points=41, eta=0.611)
    pmax = float(table.metadata["p_ee_max"])
    vis = float(table.metadata["dip_visibility"])
    ok = abs(pmax - 0.139) <= 0.01 and abs(vis - 0.910) <= 0.03 and dt < 300
    report(6, "lossy HOM experiment", ok,
           f"P_ee(plateau)={pmax:.4f} (0.139 +- 0.01), V={vis:.4f} (0.910 +- 0.03), {dt:.2f}s")
    assert pmax == pytest.approx(0.139, abs=0.01)
    assert vis == pytest.approx(0.910, abs=0.03)
    assert dt < 300


def test_c07_bell_fidelity(report):
    table, dt = run_scenario("bell_tomography", eta=0.611)
    f = float(table.metadata["bell_fidelity"])
    ok = abs(f - 0.816) <= 0.05 and dt < 120
    report(7, "Bell-state fidelity", ok, f"F={f:.4f} (0.816 +- 0.05), {dt:.2f}s")
    assert f == pytest.approx(0.816, abs=0.05)
    assert dt < 120


def test_c08_mz_routing(report):
    ideal, _ = run_scenario("mz_scan", model="analytic", lossless=True, eta=0.5)
    v_ideal = (float(ideal.metadata["visibility_q1"]), float(ideal.metadata["visibility_q2"]))
    lossy, dt = run_scenario("mz_scan")
    v_q2 = float(lossy.metadata["visibility_q2"])
    ok = all(abs(v - 1.0) <= 1e-12 for v in v_ideal) and abs(v_q2 - 0.910) <= 0.04 and dt < 60
    report(8, "Mach-Zehnder visibility", ok,
           f"lossless balanced V={v_ideal[0]:.12f}/{v_ideal[1]:.12f}; device V_Q2={v_q2:.4f} (0.910 +- 0.04), {dt:.2f}s")
    assert v_ideal == pytest.approx((1.0, 1.0), abs=1e-12)
    assert v_q2 == pytest.approx(0.910, abs=0.04)
    assert dt < 60


def _joint(p_q1, p_q2, p_ee):
    return np.array([1 - p_q1 - p_q2 + p_ee, p_q2 - p_ee, p_q1 - p_ee, p_ee])


def test_c09_readout_correction(report):
    t0 = time.perf_counter()
    v = measure.DEVICE_VISIBILITY
    plateau = hom_pipeline(8.4, 8.3, 200.0)
    dip = hom_pipeline(8.4, 8.3, 0.0)
    p_top = _joint(plateau.p_q1, plateau.p_q2, plateau.p_ee)
    raw_top = (v.matrix @ p_top)[3]
    # choose the true dip P_ee so the measured dip has raw visibility 0.864 (measured ee is linear in it)
    m0 = (v.matrix @ _joint(dip.p_q1, dip.p_q2, 0.0))[3]
    m1 = (v.matrix @ _joint(dip.p_q1, dip.p_q2, 1.0))[3]
    x = (raw_top * (1 - 0.864) - m0) / (m1 - m0)
    meas_top = measure.apply_confusion(p_top, v)
    meas_dip = measure.apply_confusion(_joint(dip.p_q1, dip.p_q2, x), v)
    raw_vis = 1 - meas_dip.p_ee / meas_top.p_ee
    corr_vis = 1 - measure.correct_readout(meas_dip, v).p_ee / measure.correct_readout(meas_top, v).p_ee
    ident = np.max(np.abs(np.linalg.inv(v.matrix) @ v.matrix - np.eye(4)))
    dt = time.perf_counter() - t0
    ok = abs(corr_vis - 0.910) <= 0.005 and ident <= 1e-9 and dt < 1
    report(9, "readout correction", ok,
           f"raw V={raw_vis:.4f} -> corrected V={corr_vis:.4f} (0.910 +- 0.005); |V^-1 V - I|={ident:.1e}, {dt:.2f}s")
    assert raw_vis == pytest.approx(0.864, abs=1e-12)
    assert corr_vis == pytest.approx(0.910, abs=0.005)
    assert ident <= 1e-9
    assert dt < 1


def test_c10_eta_extraction(report, tmp_path):
    t0 = time.perf_counter()
    path = tmp_path / "bs.csv"
    write_sparams_csv(path, synthetic_sparams(0.612, 3.925, eta_curvature=1.5))
    eta, t1, t2 = eta_from_s_params(read_sparams_csv(path), 3.925)
    dt = time.perf_counter() - t0
    ok = abs(eta - 0.612) <= 1e-6 and abs(t1 + t2 - math.pi) <= 1e-6 and dt < 1
    report(10, "reflectivity from S-parameters", ok,
           f"eta={eta:.9f} (0.612, tol 1e-6), theta1+theta2={t1 + t2:.9f} (pi, tol 1e-6), {dt:.2f}s")
    assert eta == pytest.approx(0.612, abs=1e-6)
    assert t1 + t2 == pytest.approx(math.pi, abs=1e-6)
    assert dt < 1


def test_c11_property_suites(report):
    t0 = time.perf_counter()
    checks = verify.run_checks(echo=None)
    failed = [c.name for c in checks if not c.passed]
    # lossless emit -> catch through a virtual cavity, checked for trace preservation too
    sigma = 17.9
    grid = TimeGrid.spanning(-15 * sigma, 15 * sigma + 16 * 14, 0.1)
    sched = kappa_for_emission(make_sech(sigma, 0.0, grid))
    wave, _ = emitted_waveform(sched)
    s = JointState.product([("q1", 2, 1), ("v", 2, 0)])
    tr = simulate_cascade(CascadeConfig(s, grid, {"e": [Emitter("q1", sched), OutputMode("v", wave)]}))
    s2 = JointState.product([("v", 2, tr.final.reduced(["v"])), ("q2", 2, 0)])
    tr2 = simulate_cascade(CascadeConfig(s2, grid, {"c": [InputMode("v", wave), Emitter("q2", kappa_for_catch(wave))]},
                                         q1="q2"))
    capture = tr2.p_q1[-1]
    drift = max(tr.trace_drift, tr2.trace_drift)
    dt = time.perf_counter() - t0
    ok = not failed and capture > 0.999 and drift < 1e-6 and dt < 120
    report(11, "property and invariant suites", ok,
           f"{len(checks) - len(failed)}/{len(checks)} checks pass; lossless round-trip capture {capture:.6f} (>0.999); "
           f"trace drift {drift:.1e}, {dt:.2f}s")
    assert not failed
    assert capture > 0.999
    assert drift < 1e-6
    assert dt < 120


def test_c12_time_bin(report):
    table, dt = run_scenario("time_bin_hom")
    pees = table.column("p_ee")
    ok = len(pees) == 4 and max(pees) < 0.006 and dt < 300
    report(12, "time-bin coincidences", ok, f"P_ee = {', '.join(f'{p:.4f}' for p in pees)} (all < 0.006), {dt:.2f}s")
    assert len(pees) == 4
    assert max(pees) < 0.006
    assert dt < 300

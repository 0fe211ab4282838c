"""Named experiments runnable from a configuration file.

Every scenario takes the common channel/qubit parameters plus its own, and
returns a :class:`ResultTable` whose metadata carries the headline numbers.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from importlib import metadata as importlib_metadata
from typing import Any, Callable

import numpy as np

from .. import measure
from ..errors import ParameterError, UnknownScenarioError
from ..oracle import AnalyticSech, quadrature_overlap
from ..pulse_qubit import pipeline, protocols
from ..pulse_qubit.shaping import ChannelGeometry, IDEAL_QUBIT, QubitParams, time_bin_target
from ..scatter import (
    Beamsplitter,
    LossChannel,
    coincidence_probability_time,
    eta_from_s_params,
    mz_route,
    read_sparams_csv,
    synthetic_sparams,
)
from ..temporal_mode import TimeGrid, Wavepacket, common_grid, delayed, detuned, make_sech, overlap
from .config import ScenarioConfig, format_value
from .results import ResultTable, table_from_columns

COMMON_DEFAULTS: dict[str, Any] = {
    "eta": 0.61,
    "theta_r": math.pi / 2,
    "tau_ph_us": 1.3,
    "t_travel_1_us": 0.225,
    "t_travel_2_us": 0.30,
    "lossless": False,
    "kappa_max": 1 / 14,
    "dt_ns": 0.1,
    "dephasing": "echo",
    "ideal_qubits": False,
    "q1.f_ghz": 3.925,
    "q1.t1_us": 26.7,
    "q1.t2_ramsey_us": 3.0,
    "q1.t2_echo_us": 11.2,
    "q2.f_ghz": 3.925,
    "q2.t1_us": 22.0,
    "q2.t2_ramsey_us": 3.4,
    "q2.t2_echo_us": 9.4,
    "shots": 0,
    "seed": 0,
}


@dataclass(frozen=True)
class Scenario:
    name: str
    run: Callable[[dict], ResultTable]
    defaults: dict
    plot: tuple[str, ...]
    summary: str


SCENARIOS: dict[str, Scenario] = {}


def _register(name: str, defaults: dict, plot: tuple[str, ...]):
    def wrap(fn):
        SCENARIOS[name] = Scenario(name, fn, defaults, plot, (fn.__doc__ or "").strip().splitlines()[0])
        return fn

    return wrap


# ---------------------------------------------------------------------------
# parameter helpers


def _num(p: dict, key: str, lo: float = -math.inf, hi: float = math.inf) -> float:
    v = p[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParameterError(f"{key} must be a number, got {v!r}")
    if not lo <= v <= hi:
        raise ParameterError(f"{key}={v} outside [{lo}, {hi}]")
    return float(v)


def _int(p: dict, key: str, lo: int = 0) -> int:
    v = p[key]
    if isinstance(v, bool) or not isinstance(v, int) or v < lo:
        raise ParameterError(f"{key} must be an integer >= {lo}, got {v!r}")
    return v


def _floats(p: dict, key: str) -> list[float]:
    v = p[key]
    vals = v if isinstance(v, list) else [v]
    if not vals or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in vals):
        raise ParameterError(f"{key} must be a list of numbers, got {v!r}")
    return [float(x) for x in vals]


def _choice(p: dict, key: str, options: tuple[str, ...]) -> str:
    v = str(p[key])
    if v not in options:
        raise ParameterError(f"{key} must be one of {options}, got {v!r}")
    return v


def _geometry(p: dict) -> ChannelGeometry:
    t1 = _num(p, "t_travel_1_us", 0)
    t2 = _num(p, "t_travel_2_us", 0)
    if p["lossless"]:
        return ChannelGeometry.lossless(t1, t2)
    return ChannelGeometry(t1, t2, _num(p, "tau_ph_us", 0))


def _qubit(p: dict, q: str) -> QubitParams:
    if p["ideal_qubits"]:
        return IDEAL_QUBIT
    return QubitParams(
        _num(p, f"{q}.f_ghz", 0), _num(p, f"{q}.t1_us", 0), _num(p, f"{q}.t2_ramsey_us", 0), _num(p, f"{q}.t2_echo_us", 0)
    )


def _bs(p: dict) -> Beamsplitter:
    return Beamsplitter(_num(p, "eta", 0, 1), _num(p, "theta_r"))


def _setup(p: dict) -> protocols.Setup:
    return protocols.Setup(
        geometry=_geometry(p),
        bs=_bs(p),
        q1=_qubit(p, "q1"),
        q2=_qubit(p, "q2"),
        kappa_max=_num(p, "kappa_max", 0),
        dephasing=_choice(p, "dephasing", ("ramsey", "echo")),
        dt=_num(p, "dt_ns", 1e-4, 10),
    )


def _rng(p: dict) -> np.random.Generator:
    return np.random.default_rng(_int(p, "seed"))


def _linspace(p: dict, lo: str, hi: str, n: str) -> np.ndarray:
    a, b, k = _num(p, lo), _num(p, hi), _int(p, n, 2)
    if b <= a:
        raise ParameterError(f"{hi} must exceed {lo}")
    return np.linspace(a, b, k)


def _pipeline_kw(p: dict) -> dict:
    geom = _geometry(p)
    return dict(geometry=geom, eta=_num(p, "eta", 0, 1), reflection_phase=_num(p, "theta_r"),
                kappa_max=_num(p, "kappa_max", 0), dt=_num(p, "dt_ns", 1e-4, 10),
                efficiencies=_efficiencies(p, geom))


def _efficiencies(p: dict, geom: ChannelGeometry) -> tuple[float, float]:
    if "capture_efficiency" in p and p["capture_efficiency"] not in ("", "auto"):
        e = _num(p, "capture_efficiency", 0, 1)
        return e, e
    e = pipeline.efficiency_from_alpha(_num(p, "alpha", 0), geom)
    return e, e


def _sample_joint(p_q1: float, p_q2: float, p_ee: float, shots: int, rng) -> measure.TwoQubitProbVector:
    vec = np.array([1 - p_q1 - p_q2 + p_ee, p_q2 - p_ee, p_q1 - p_ee, p_ee])
    return measure.sample_outcomes(np.clip(vec, 0, None), shots, rng)


def _joint_vector(p_q1: float, p_q2: float, p_ee: float) -> np.ndarray:
    return np.clip(np.array([1 - p_q1 - p_q2 + p_ee, p_q2 - p_ee, p_q1 - p_ee, p_ee]), 0, None)


def _fmt(x: float) -> str:
    return format_value(float(x))


# ---------------------------------------------------------------------------
# scenarios


@_register("single_split", {"sigma_ns": 17.9}, ("p_q1", "p_q2", "p_ee"))
def run_single_split(p: dict) -> ResultTable:
    """Time traces of one phonon released by Q1 and shared by the beamsplitter between both qubits.

    Checked by tests/test_acceptance.py::test_bell_fidelity (same simulation).
    """
    res = protocols.single_split(_num(p, "sigma_ns", 0), _setup(p))
    tr = res.trace
    return table_from_columns(
        [("t_ns", tr.times), ("p_q1", tr.p_q1), ("p_q2", tr.p_q2), ("p_ee", tr.p_ee)],
        {"final_p_q1": _fmt(tr.p_q1[-1]), "final_p_q2": _fmt(tr.p_q2[-1]), "max_p_ee": _fmt(np.max(tr.p_ee)),
         "max_trace_drift": _fmt(tr.trace_drift)},
    )


@_register("bell_tomography", {"sigma_ns": 17.9, "project_psd": False}, ())
def run_bell_tomography(p: dict) -> ResultTable:
    """Two-qubit tomography of the state left by splitting one phonon, and its Bell fidelity.

    Acceptance: tests/test_acceptance.py::test_bell_fidelity.
    """
    res = protocols.single_split(_num(p, "sigma_ns", 0), _setup(p))
    expect = measure.simulate_pauli_measurements(res.rho, _int(p, "shots"), _rng(p))
    rho = measure.tomography_reconstruct(expect, project_psd=bool(p["project_psd"]))
    rows = [[i, j, rho[i, j].real, rho[i, j].imag, abs(rho[i, j])] for i in range(4) for j in range(4)]
    meta = {
        "bell_fidelity": _fmt(measure.bell_fidelity(rho)),
        "state_fidelity": _fmt(measure.state_fidelity(rho)),
        "min_eigenvalue": _fmt(measure.min_eigenvalue(rho)),
        "p_eg": _fmt(rho[2, 2].real),
        "p_ge": _fmt(rho[1, 1].real),
        "abs_coherence": _fmt(abs(rho[1, 2])),
    }
    return ResultTable(["row", "col", "re", "im", "abs"], rows, meta)


@_register("mz_scan", {"sigma_ns": 17.9, "phase_points": 16, "model": "cascade"}, ("p_q1", "p_q2"))
def run_mz_scan(p: dict) -> ResultTable:
    """Split a phonon, shift Q1's phase, recombine on the beamsplitter; fringe visibility per qubit.

    ``model = analytic`` routes an ideal single excitation through two passes
    of the splitter with round-trip loss. Acceptance: test_mz_routing.
    """
    n = _int(p, "phase_points", 8)
    phases = np.linspace(0, 2 * np.pi, n, endpoint=False)
    model = _choice(p, "model", ("cascade", "analytic"))
    if model == "cascade":
        pts = protocols.mz_scan(phases, _num(p, "sigma_ns", 0), _setup(p))
        p1 = np.array([q.p_q1 for q in pts])
        p2 = np.array([q.p_q2 for q in pts])
    else:
        g = _geometry(p)
        loss = LossChannel(g.survival_1 ** 2, g.survival_2 ** 2)
        vals = [mz_route(_bs(p), float(ph), loss) for ph in phases]
        p1 = np.array([v[0] for v in vals])
        p2 = np.array([v[1] for v in vals])
    shots = _int(p, "shots")
    if shots:
        rng = _rng(p)
        p1 = rng.binomial(shots, np.clip(p1, 0, 1)) / shots
        p2 = rng.binomial(shots, np.clip(p2, 0, 1)) / shots
    meta = {
        "visibility_q1": _fmt(measure.fringe_visibility(phases, p1)),
        "visibility_q2": _fmt(measure.fringe_visibility(phases, p2)),
        "model": model,
    }
    return table_from_columns([("phase_rad", phases), ("p_q1", p1), ("p_q2", p2)], meta)


_ALPHA = {"alpha": pipeline.ALPHA_DEFAULT, "capture_efficiency": "auto"}


@_register("hom_delay_scan", {"sigma1_ns": 8.4, "sigma2_ns": 8.3, "tau_min_ns": -200.0, "tau_max_ns": 200.0,
                              "tau_points": 41, "readout": "none", **_ALPHA}, ("p11", "p_ee"))
def run_hom_delay_scan(p: dict) -> ResultTable:
    """Joint excitation probability against the relative delay of two phonons at the beamsplitter.

    Acceptance: test_theory_visibility, test_full_experiment_hom.
    """
    s1, s2 = _num(p, "sigma1_ns", 0), _num(p, "sigma2_ns", 0)
    taus = _linspace(p, "tau_min_ns", "tau_max_ns", "tau_points")
    kw = _pipeline_kw(p)
    eta = kw["eta"]
    grid = common_grid([s1, s2], [0.0, 0.0], kw["dt"], pad=float(np.max(np.abs(taus))))
    phi1, phi2 = make_sech(s1, 0.0, grid), make_sech(s2, 0.0, grid)
    p11 = np.array([coincidence_probability_time(phi1, phi2, float(t), eta) for t in taus])
    res = [pipeline.hom_pipeline(s1, s2, float(t), **kw) for t in taus]
    pq1 = np.array([r.p_q1 for r in res])
    pq2 = np.array([r.p_q2 for r in res])
    pee = np.array([r.p_ee for r in res])
    sigma = max(s1, s2)
    mask = np.abs(taus) >= measure.plateau_threshold(sigma)
    cols = [("tau_ns", taus), ("p11", p11), ("p_q1", pq1), ("p_q2", pq2), ("p_ee", pee)]
    meta = {
        "dip_visibility": _fmt(measure.dip_visibility(taus, pee, sigma)),
        "dip_visibility_p11": _fmt(measure.dip_visibility(taus, p11, sigma)),
        "p_ee_max": _fmt(np.mean(pee[mask])) if mask.any() else "nan",
        "p_ee_min": _fmt(np.min(pee)),
        "alpha_fit": _fmt(np.mean(pee[mask]) / np.mean(p11[mask])) if mask.any() else "nan",
        "capture_efficiency": _fmt(kw["efficiencies"][0]),
    }
    shots = _int(p, "shots")
    readout = _choice(p, "readout", ("none", "device"))
    if shots or readout != "none":
        rng = _rng(p)
        v = measure.DEVICE_VISIBILITY if readout == "device" else measure.VisibilityMatrix.identity()
        meas, corr = [], []
        for a, b, c in zip(pq1, pq2, pee):
            m = v.matrix @ _joint_vector(a, b, c)
            m = measure.sample_outcomes(m, shots, rng).as_array() if shots else m / m.sum()
            meas.append(m[3])
            corr.append(measure.correct_readout(m, v).p_ee)
        cols += [("p_ee_meas", meas), ("p_ee_corr", corr)]
        meta["dip_visibility_meas"] = _fmt(measure.dip_visibility(taus, meas, sigma))
        meta["dip_visibility_corr"] = _fmt(measure.dip_visibility(taus, corr, sigma))
    return table_from_columns(cols, meta)


@_register("hom_freq_scan", {"sigma1_ns": 16.0, "sigma2_ns": 16.7, "df_min_mhz": -30.0, "df_max_mhz": 30.0,
                             "df_points": 121, "tau_ns": 0.0, **_ALPHA}, ("p11_time", "p_ee"))
def run_hom_freq_scan(p: dict) -> ResultTable:
    """Coincidences against the frequency detuning of the two phonons; dip width in MHz.

    Acceptance: test_frequency_fwhm.
    """
    from ..scatter import coincidence_probability_freq
    from ..temporal_mode import spectrum

    s1, s2 = _num(p, "sigma1_ns", 0), _num(p, "sigma2_ns", 0)
    tau = _num(p, "tau_ns")
    dfs = _linspace(p, "df_min_mhz", "df_max_mhz", "df_points")
    kw = _pipeline_kw(p)
    eta = kw["eta"]
    grid = common_grid([s1, s2], [0.0, 0.0], kw["dt"], pad=abs(tau))
    phi1, phi2 = make_sech(s1, 0.0, grid), make_sech(s2, 0.0, grid)
    spec1 = spectrum(phi1)
    p_time, p_freq, pee = [], [], []
    for df in dfs:
        q2 = detuned(phi2, float(df))
        p_time.append(coincidence_probability_time(phi1, q2, tau, eta))
        p_freq.append(coincidence_probability_freq(spec1, spectrum(q2), tau, eta))
        pee.append(pipeline.hom_pipeline(s1, s2, tau, float(df), **kw).p_ee)
    p_time, pee = np.array(p_time), np.array(pee)
    far = 1 - 2 * eta + 2 * eta**2
    meta = {
        "fwhm_mhz": _fmt(measure.fwhm(dfs, p_time, far)),
        "fwhm_pipeline_mhz": _fmt(measure.fwhm(dfs, pee, float(max(pee[0], pee[-1])))),
        "min_p11": _fmt(np.min(p_time)),
    }
    return table_from_columns([("delta_f_mhz", dfs), ("p11_time", p_time), ("p11_freq", p_freq), ("p_ee", pee)], meta)


def closed_form_visibility(mode_overlap_sq: float, eta: float) -> float:
    far = 1 - 2 * eta + 2 * eta**2
    return (2 * eta - 2 * eta**2) * mode_overlap_sq / far


@_register("hom_width_scan", {"sigma1_ns": 8.8, "sigma2_ns": [8.8, 18.7, 28.9, 36.4, 43.3], **_ALPHA},
           ("visibility_grid", "visibility_quadrature"))
def run_hom_width_scan(p: dict) -> ResultTable:
    """Dip visibility against the width mismatch of the two phonons.

    Columns compare the grid overlap, adaptive quadrature and the lossy
    pipeline. Acceptance: test_width_scan.
    """
    s1 = _num(p, "sigma1_ns", 0)
    kw = _pipeline_kw(p)
    eta = kw["eta"]
    rows = []
    for s2 in _floats(p, "sigma2_ns"):
        grid = common_grid([s1, s2], [0.0, 0.0], kw["dt"])
        ov_grid = abs(overlap(make_sech(s1, 0.0, grid), make_sech(s2, 0.0, grid)))
        ov_quad = abs(quadrature_overlap(AnalyticSech(s1), AnalyticSech(s2)))
        far = pipeline.hom_pipeline(s1, s2, 40 * max(s1, s2), **kw).p_ee
        near = pipeline.hom_pipeline(s1, s2, 0.0, **kw).p_ee
        rows.append([s2, s2 / s1, ov_grid, ov_quad, closed_form_visibility(ov_grid**2, eta),
                     closed_form_visibility(ov_quad**2, eta), (far - near) / far])
    cols = ["sigma2_ns", "sigma_ratio", "overlap_grid", "overlap_quadrature", "visibility_grid",
            "visibility_quadrature", "visibility_pipeline"]
    dev = max(abs(r[4] - r[5]) for r in rows)
    return ResultTable(cols, rows, {"max_grid_vs_quadrature": _fmt(dev)})


@_register("two_phonon_detection", {"sigma_ns": 8.4}, ("p_q1", "p_q2", "p_ee"))
def run_two_phonon_detection(p: dict) -> ResultTable:
    """Both qubits catch simultaneously arriving phonons, are dumped to ground, then re-catch the
    phonons that were not absorbed.

    Covered by tests/test_protocols.py (dump and saturation checks).
    """
    res = protocols.two_phonon_detection(_num(p, "sigma_ns", 0), _setup(p))
    tr = res.trace
    out1 = tr.outflow.get("to_q1", np.zeros(len(tr.times)))
    out2 = tr.outflow.get("to_q2", np.zeros(len(tr.times)))
    r1 = tr.populations.get("r1", np.full(len(tr.times), np.nan))
    r2 = tr.populations.get("r2", np.full(len(tr.times), np.nan))
    meta = {
        "p_q1": _fmt(res.p_q1), "p_q2": _fmt(res.p_q2), "p_ee": _fmt(res.p_ee),
        "reflected_q1": _fmt(res.reflected[0]), "reflected_q2": _fmt(res.reflected[1]),
        "dump_start_ns": _fmt(res.dump_window[0]), "dump_end_ns": _fmt(res.dump_window[1]),
    }
    for label, (a, b, c) in res.secondary.items():
        meta[f"secondary_{label}_p_q1"] = _fmt(a)
        meta[f"secondary_{label}_p_q2"] = _fmt(b)
        meta[f"secondary_{label}_p_ee"] = _fmt(c)
    return table_from_columns(
        [("t_ns", tr.times), ("p_q1", tr.p_q1), ("p_q2", tr.p_q2), ("p_ee", tr.p_ee),
         ("reflected_q1", np.nan_to_num(r1)), ("reflected_q2", np.nan_to_num(r2)),
         ("outflow_q1", out1), ("outflow_q2", out2)],
        meta,
    )


def time_bin_pair(sigma: float, separation: float, kappa_max: float, dt: float) -> tuple[Wavepacket, list[Wavepacket]]:
    """Emitted two-bin waveform (equal weights) and the two single-bin filter modes."""
    from ..pulse_qubit.shaping import emitted_waveform, time_bin_schedule
    from ..pulse_qubit.pipeline import tail_padding

    bins = (0.0, separation)
    grid = TimeGrid.spanning(-15 * sigma, separation + 15 * sigma + tail_padding(kappa_max), dt)
    w = (1 / math.sqrt(2), 1 / math.sqrt(2))
    sched = time_bin_schedule(sigma, w, bins, grid, kappa_max)
    wave, _ = emitted_waveform(sched)
    target = time_bin_target(sigma, bins, w, grid)
    if abs(overlap(target, wave)) < 0.99:
        raise ParameterError(f"time-bin emission overlap {abs(overlap(target, wave)):.4f} < 0.99")
    split = 0.5 * separation
    filters = []
    for keep in (wave.times < split, wave.times >= split):
        filters.append(Wavepacket(grid, np.where(keep, wave.amplitude, 0.0), f"bin{len(filters) + 1}"))
    return wave, filters


@_register("time_bin_hom", {"sigma_ns": 8.4, "bin_separation_ns": 150.0, **_ALPHA}, ("p_ee",))
def run_time_bin_hom(p: dict) -> ResultTable:
    """Two time-bin encoded phonons interfere; each qubit catches one chosen bin.

    Rows are the four bin pairings (Q1 bin, Q2 bin). Acceptance: test_time_bin.
    """
    sigma, sep = _num(p, "sigma_ns", 0), _num(p, "bin_separation_ns", 0)
    kw = _pipeline_kw(p)
    wave, filters = time_bin_pair(sigma, sep, kw["kappa_max"], kw["dt"])
    g = kw["geometry"]
    rows = []
    shots = _int(p, "shots")
    rng = _rng(p)
    for i in range(2):
        for j in range(2):
            r = pipeline.two_phonon_probabilities(
                wave, wave, Beamsplitter(kw["eta"], kw["reflection_phase"]),
                survival_in=(g.survival_1, g.survival_2), survival_out=(g.survival_1, g.survival_2),
                efficiencies=kw["efficiencies"], filters=(filters[i], filters[j]),
            )
            pee = r.p_ee
            if shots:
                pee = _sample_joint(r.p_q1, r.p_q2, r.p_ee, shots, rng).p_ee
            rows.append([i + 1, j + 1, r.p_q1, r.p_q2, pee])
    return ResultTable(["bin_q1", "bin_q2", "p_q1", "p_q2", "p_ee"], rows,
                       {"max_p_ee": _fmt(max(r[4] for r in rows))})


@_register("eta_from_vna", {"sparams": "", "f0_ghz": 3.925, "synthetic_eta": 0.612}, ("eta",))
def run_eta_from_vna(p: dict) -> ResultTable:
    """Beamsplitter reflectivity and port phases from two-port S-parameters.

    With ``sparams`` empty an ideal synthetic sweep is used. Acceptance: test_eta_extraction.
    """
    f0 = _num(p, "f0_ghz", 0)
    path = str(p["sparams"])
    recs = read_sparams_csv(path) if path else synthetic_sparams(_num(p, "synthetic_eta", 0, 1), f0)
    rows = []
    for r in recs:
        eta, t1, t2 = eta_from_s_params([r], r.frequency)
        rows.append([r.frequency, eta, t1, t2, t1 + t2])
    eta, t1, t2 = eta_from_s_params(recs, f0)
    meta = {"eta_at_f0": _fmt(eta), "theta1": _fmt(t1), "theta2": _fmt(t2), "theta_sum": _fmt(t1 + t2),
            "reciprocal_filled": str(any(r.reciprocal_filled for r in recs)).lower()}
    return ResultTable(["freq_ghz", "eta", "theta1", "theta2", "theta_sum"], rows, meta)


# ---------------------------------------------------------------------------
# runner


def library_version() -> str:
    try:
        return importlib_metadata.version("artifact")
    except importlib_metadata.PackageNotFoundError:
        return "unknown"


def resolve_parameters(cfg: ScenarioConfig) -> dict:
    if cfg.scenario not in SCENARIOS:
        raise UnknownScenarioError(f"unknown scenario {cfg.scenario!r}; known: {', '.join(sorted(SCENARIOS))}")
    sc = SCENARIOS[cfg.scenario]
    params = {**COMMON_DEFAULTS, **sc.defaults}
    unknown = sorted(set(cfg.parameters) - set(params))
    if unknown:
        raise ParameterError(f"unknown parameter(s) for {cfg.scenario}: {', '.join(unknown)}")
    params.update(cfg.parameters)
    return params


def run(cfg: ScenarioConfig) -> ResultTable:
    params = resolve_parameters(cfg)
    t0 = time.perf_counter()
    table = SCENARIOS[cfg.scenario].run(params)
    meta = {"scenario": cfg.scenario, "library_version": library_version()}
    meta.update({f"config.{k}": format_value(v) for k, v in sorted(params.items())})
    meta.update(table.metadata)
    meta["wall_time_s"] = f"{time.perf_counter() - t0:.3f}"
    table.metadata = meta
    return table

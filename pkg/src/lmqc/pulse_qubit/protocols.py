"""Staged cascade simulations of the two-qubit phonon experiments.

Each experiment is split into emission, routing and capture stages. During
emission a qubit's field is swallowed by an output virtual cavity; the
routing step applies channel loss and the beamsplitter to those cavities as
instantaneous maps; the capture stage releases them toward the qubits as
input virtual cavities. Qubits keep decohering throughout.

Port a of the beamsplitter faces Q1 and port b faces Q2. Times in ns.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ParameterError
from ..scatter import Beamsplitter
from ..temporal_mode import TimeGrid, Wavepacket, make_sech
from .cascade import (
    CascadeConfig,
    Emitter,
    InputMode,
    JointState,
    OutputMode,
    SimulationTrace,
    apply_beamsplitter,
    apply_mode_loss,
    qubit_phase,
    simulate_cascade,
    thermal_dump,
)
from .shaping import (
    DEFAULT_KAPPA_MAX,
    Q1_PARAMS,
    Q2_PARAMS,
    ChannelGeometry,
    CouplerSchedule,
    QubitParams,
    emitted_waveform,
    kappa_for_catch,
    kappa_for_emission,
)

MODE_DIM = 3


@dataclass(frozen=True)
class Setup:
    geometry: ChannelGeometry = ChannelGeometry()
    bs: Beamsplitter = Beamsplitter(0.61)
    q1: QubitParams = Q1_PARAMS
    q2: QubitParams = Q2_PARAMS
    kappa_max: float = DEFAULT_KAPPA_MAX
    dephasing: str = "echo"
    dt: float = 0.1
    window_sigmas: float = 10.0  # stage margin around packet centers

    def qubit_map(self, state: JointState) -> dict[str, QubitParams]:
        return {n: p for n, p in (("q1", self.q1), ("q2", self.q2)) if n in state.names}

    @property
    def travel_ns(self) -> tuple[float, float]:
        return 1e3 * self.geometry.t_travel_1, 1e3 * self.geometry.t_travel_2

    @property
    def survivals(self) -> tuple[float, float]:
        return self.geometry.survival_1, self.geometry.survival_2


def shifted(p: Wavepacket, delay: float, label: str | None = None) -> Wavepacket:
    """Same samples on a grid moved later by ``delay`` ns."""
    g = p.grid
    return Wavepacket(TimeGrid(g.t_start + delay, g.dt, g.n_samples), p.amplitude, p.label if label is None else label)


def shaped_emission(sigma: float, center: float, setup: Setup) -> tuple[CouplerSchedule, Wavepacket]:
    """Coupler schedule for a sech centered at ``center`` and the waveform it actually emits."""
    span = 15.0 * sigma + (16.0 / setup.kappa_max if math.isfinite(setup.kappa_max) else 0.0)
    grid = TimeGrid.spanning(center - 15.0 * sigma, center + span, setup.dt)
    sched = kappa_for_emission(make_sech(sigma, center, grid), setup.kappa_max)
    wave, _ = emitted_waveform(sched)
    return sched, wave


def _run(state: JointState, setup: Setup, channels: dict, t0: float, t1: float) -> SimulationTrace:
    cfg = CascadeConfig(
        state=state,
        grid=TimeGrid.spanning(t0, t1, setup.dt),
        channels=channels,
        qubits=setup.qubit_map(state),
        dephasing=setup.dephasing,
    )
    return simulate_cascade(cfg)


def _route(state: JointState, setup: Setup, a_in: str | None, b_in: str | None,
           out: tuple[str, str] = ("u1", "u2")) -> JointState:
    """Lossy legs into the beamsplitter, the splitter itself, lossy legs out to the qubits."""
    s1, s2 = setup.survivals
    s = state
    if a_in is None:
        a_in = "_vac_a"
        s = s.with_subsystems([(a_in, MODE_DIM, 0)])
    if b_in is None:
        b_in = "_vac_b"
        s = s.with_subsystems([(b_in, MODE_DIM, 0)])
    s = apply_mode_loss(s, a_in, s1)
    s = apply_mode_loss(s, b_in, s2)
    s = apply_beamsplitter(s, a_in, b_in, setup.bs)
    s = apply_mode_loss(s, a_in, s1)
    s = apply_mode_loss(s, b_in, s2)
    return s.renamed({a_in: out[0], b_in: out[1]})


def _catch_channels(setup: Setup, arrivals: dict[str, tuple[str, Wavepacket]],
                    reflect: dict[str, str] | None = None) -> dict:
    """Input cavity -> qubit (-> optional output cavity for the reflected field)."""
    chans = {}
    for qubit, (mode, packet) in arrivals.items():
        chain = [InputMode(mode, packet), Emitter(qubit, kappa_for_catch(packet, setup.kappa_max))]
        if reflect and qubit in reflect:
            chain.append(OutputMode(reflect[qubit], packet))
        chans[f"to_{qubit}"] = chain
    return chans


def _end_of(p: Wavepacket, sigma: float, setup: Setup) -> float:
    return p.mean_time() + setup.window_sigmas * sigma


def _start_of(p: Wavepacket, sigma: float, setup: Setup) -> float:
    return p.mean_time() - setup.window_sigmas * sigma


# ---------------------------------------------------------------------------
# single phonon split (Bell state generation)


@dataclass
class SplitResult:
    trace: SimulationTrace
    rho: np.ndarray  # two-qubit density matrix, basis gg, ge, eg, ee (Q1 first)
    t_catch: tuple[float, float]
    state: JointState = field(repr=False, default=None)


def two_qubit_rho(state: JointState) -> np.ndarray:
    rho = state.reduced(["q1", "q2"])
    return rho / np.trace(rho).real


def single_split(sigma: float = 17.9, setup: Setup = Setup(), t_emit: float = 0.0,
                 t_measure: float | None = None) -> SplitResult:
    """Q1 releases one phonon that the beamsplitter shares between Q1 and Q2."""
    ta, tb = setup.travel_ns
    sched, wave = shaped_emission(sigma, t_emit, setup)
    state = JointState.product([("q1", 2, 1), ("q2", 2, 0), ("v", 2, 0)])
    t_end_emit = _end_of(wave, sigma, setup)
    tr1 = _run(state, setup, {"emit_q1": [Emitter("q1", sched), OutputMode("v", wave)]},
               _start_of(wave, sigma, setup), t_end_emit)
    s = tr1.final
    # widen the flying mode to the common truncation before routing
    s = _widen(s, "v")
    s = _route(s, setup, "v", None)
    arr1 = shifted(wave, 2 * ta)
    arr2 = shifted(wave, ta + tb)
    t_stop = _end_of(arr2, sigma, setup) if t_measure is None else t_measure
    tr2 = _run(s, setup, _catch_channels(setup, {"q1": ("u1", arr1), "q2": ("u2", arr2)}), t_end_emit, t_stop)
    trace = SimulationTrace.concatenate([tr1, tr2])
    return SplitResult(trace, two_qubit_rho(tr2.final), (arr1.mean_time(), arr2.mean_time()), tr2.final)


def _widen(state: JointState, name: str, dim: int = MODE_DIM) -> JointState:
    """Embed a mode into a larger Fock truncation."""
    k = state.index(name)
    d = state.dims[k]
    if d == dim:
        return state
    iso = np.zeros((dim, d))
    iso[:d, :d] = np.eye(d)
    left = int(np.prod(state.dims[:k]))
    right = int(np.prod(state.dims[k + 1:]))
    W = np.kron(np.kron(np.eye(left), iso), np.eye(right))
    dims = state.dims[:k] + (dim,) + state.dims[k + 1:]
    return JointState(state.names, dims, W @ state.matrix @ W.T)


# ---------------------------------------------------------------------------
# Mach-Zehnder: split, phase, recombine


@dataclass
class MZPoint:
    phase: float
    p_q1: float
    p_q2: float


def mz_scan(phases, sigma: float = 17.9, setup: Setup = Setup()) -> list[MZPoint]:
    """Split a phonon, imprint ``phase`` on Q1, re-release both halves onto the same splitter.

    The final populations are linear in the state, which depends on the phase
    only through ``exp(+-i phase)``; three simulated phases therefore fix the
    whole fringe exactly.
    """
    ta, tb = setup.travel_ns
    res = single_split(sigma, setup)
    base = res.state.trace_out(["u1", "u2"])
    t0 = res.trace.times[-1]
    # Q2 (farther) releases first so both halves meet at the splitter
    t_rel2 = t0 + setup.window_sigmas * sigma
    t_rel1 = t_rel2 + (tb - ta)
    sched1, wave1 = shaped_emission(sigma, t_rel1, setup)
    sched2, wave2 = shaped_emission(sigma, t_rel2, setup)
    t_emit_end = max(_end_of(wave1, sigma, setup), _end_of(wave2, sigma, setup))
    arr1 = shifted(wave1, 2 * ta)
    arr2 = shifted(wave1, ta + tb)
    t_stop = _end_of(arr2, sigma, setup)

    def run(phi: float) -> tuple[float, float]:
        s = qubit_phase(base, "q1", phi).with_subsystems([("w1", 2, 0), ("w2", 2, 0)])
        tr = _run(s, setup, {
            "emit_q1": [Emitter("q1", sched1), OutputMode("w1", wave1)],
            "emit_q2": [Emitter("q2", sched2), OutputMode("w2", wave2)],
        }, t0, t_emit_end)
        s = _route(_widen(_widen(tr.final, "w1"), "w2"), setup, "w1", "w2")
        tr2 = _run(s, setup, _catch_channels(setup, {"q1": ("u1", arr1), "q2": ("u2", arr2)}), t_emit_end, t_stop)
        return float(tr2.p_q1[-1]), float(tr2.p_q2[-1])

    probe = np.array([0.0, 2 * np.pi / 3, 4 * np.pi / 3])
    design = np.c_[np.ones(3), np.cos(probe), np.sin(probe)]
    values = np.array([run(p) for p in probe])
    coef = np.linalg.solve(design, values)
    out = []
    for phi in phases:
        p1, p2 = np.array([1.0, math.cos(phi), math.sin(phi)]) @ coef
        out.append(MZPoint(float(phi), float(p1), float(p2)))
    return out


# ---------------------------------------------------------------------------
# two phonons meeting at the splitter


@dataclass
class TwoPhononResult:
    trace: SimulationTrace
    p_q1: float
    p_q2: float
    p_ee: float
    reflected: tuple[float, float]
    secondary: dict = field(default_factory=dict)
    dump_window: tuple[float, float] = (0.0, 0.0)


def hom_cascade(sigma: float = 8.4, setup: Setup = Setup(), t_bs: float = 0.0,
                reflect: bool = True) -> tuple[SimulationTrace, JointState, dict]:
    """Both qubits release identical phonons that reach the splitter together.

    Returns the trace, the final state after capture and the arrival packets.
    Unabsorbed phonons heading back toward the splitter are collected in
    output cavities ``r1``/``r2`` when ``reflect`` is set.
    """
    ta, tb = setup.travel_ns
    sched1, wave1 = shaped_emission(sigma, t_bs - ta, setup)
    sched2, wave2 = shaped_emission(sigma, t_bs - tb, setup)
    state = JointState.product([("q1", 2, 1), ("q2", 2, 1), ("v1", MODE_DIM, 0), ("v2", MODE_DIM, 0)])
    t_start = _start_of(wave2, sigma, setup)
    t_emit_end = max(_end_of(wave1, sigma, setup), _end_of(wave2, sigma, setup))
    tr1 = _run(state, setup, {
        "emit_q1": [Emitter("q1", sched1), OutputMode("v1", wave1)],
        "emit_q2": [Emitter("q2", sched2), OutputMode("v2", wave2)],
    }, t_start, t_emit_end)
    # both halves occupy the same temporal mode at the splitter
    s = _route(tr1.final, setup, "v1", "v2")
    arr1 = shifted(wave1, 2 * ta)
    arr2 = shifted(wave2, 2 * tb)
    refl = {"q1": "r1", "q2": "r2"} if reflect else None
    if reflect:
        s = s.with_subsystems([("r1", MODE_DIM, 0), ("r2", MODE_DIM, 0)])
    t_stop = max(_end_of(arr1, sigma, setup), _end_of(arr2, sigma, setup))
    tr2 = _run(s, setup, _catch_channels(setup, {"q1": ("u1", arr1), "q2": ("u2", arr2)}, refl), t_emit_end, t_stop)
    return SimulationTrace.concatenate([tr1, tr2]), tr2.final, {"q1": arr1, "q2": arr2}


def two_phonon_detection(sigma: float = 8.4, setup: Setup = Setup()) -> TwoPhononResult:
    """Two-phonon interference, a thermal dump of both qubits, then a second catch of
    the phonons each qubit failed to absorb.

    The reflected phonons return to the splitter at different times, so each
    is routed on its own (variant ``b`` from Q1's side, ``c`` from Q2's).
    """
    ta, tb = setup.travel_ns
    trace, final, arrivals = hom_cascade(sigma, setup)
    p1, p2, pee = float(trace.p_q1[-1]), float(trace.p_q2[-1]), float(trace.p_ee[-1])
    refl = (final.population("r1"), final.population("r2"))
    t_dump = float(trace.times[-1])
    s = thermal_dump(thermal_dump(final.trace_out(["u1", "u2"]), "q1"), "q2")
    secondary = {}
    t_resume = math.inf
    for label, mode, other, leg in (("b", "r1", "r2", ta), ("c", "r2", "r1", tb)):
        src = arrivals["q1" if mode == "r1" else "q2"]
        s_in = s.trace_out([other])
        routed = _route(s_in, setup, "r1", None) if mode == "r1" else _route(s_in, setup, None, "r2")
        arr1 = shifted(src, leg + ta)
        arr2 = shifted(src, leg + tb)
        t0 = max(t_dump, min(_start_of(arr1, sigma, setup), _start_of(arr2, sigma, setup)))
        t1 = max(_end_of(arr1, sigma, setup), _end_of(arr2, sigma, setup))
        t_resume = min(t_resume, t0)
        tr = _run(routed, setup, _catch_channels(setup, {"q1": ("u1", arr1), "q2": ("u2", arr2)}), t0, t1)
        secondary[label] = (float(tr.p_q1[-1]), float(tr.p_q2[-1]), float(tr.p_ee[-1]))
    return TwoPhononResult(trace, p1, p2, pee, refl, secondary, (t_dump, t_resume))

"""Cascaded master equation for pulsed emitters, absorbers and flying modes.

Flying phonons are represented by virtual cavities: an input cavity ``u``
releases its content into the channel with the shape of a given wavepacket,
an output cavity ``v`` swallows whatever part of the passing field lies in a
given temporal mode. Each channel is a unidirectional chain of such elements
interleaved with qubits and lumped loss, combined with the SLH series rule.

The state lives on a tensor product of named subsystems (qubits: 2 levels,
modes: usually 3 levels). Integration is restricted to the subspace with at
most ``n_excitations`` quanta, which every term of the generator preserves.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

from ..errors import ConvergenceError, ParameterError
from ..scatter import Beamsplitter, bs_mode_matrix, damping_kraus, fock_basis, fock_lift
from ..temporal_mode import TimeGrid, Wavepacket
from .shaping import CouplerSchedule, QubitParams

TRACE_TOL = 1e-6
DENOM_CLAMP = 1e-6


# ---------------------------------------------------------------------------
# joint states


def _lowering(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)


@dataclass(frozen=True)
class JointState:
    """Density matrix on the ordered tensor product of named subsystems."""

    names: tuple[str, ...]
    dims: tuple[int, ...]
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        names, dims = tuple(self.names), tuple(int(d) for d in self.dims)
        if len(names) != len(dims) or len(set(names)) != len(names):
            raise ParameterError(f"bad subsystem list {names} / {dims}")
        m = np.asarray(self.matrix, dtype=complex)
        n = int(np.prod(dims))
        if m.shape != (n, n):
            raise ParameterError(f"matrix shape {m.shape} does not match dims {dims}")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def product(cls, parts: Sequence[tuple[str, int, object]]) -> JointState:
        """Product state from ``(name, dim, local)`` where ``local`` is a level index, ket or density matrix."""
        rho = np.ones((1, 1), dtype=complex)
        for _, dim, local in parts:
            rho = np.kron(rho, _local_density(local, dim))
        return cls(tuple(p[0] for p in parts), tuple(p[1] for p in parts), rho)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ParameterError(f"no subsystem named {name!r} in {self.names}") from None

    def operator(self, name: str, op: np.ndarray) -> np.ndarray:
        """Embed a local operator acting on ``name``."""
        k = self.index(name)
        left = int(np.prod(self.dims[:k]))
        right = int(np.prod(self.dims[k + 1:]))
        return np.kron(np.kron(np.eye(left), op), np.eye(right))

    def number(self, name: str) -> np.ndarray:
        d = self.dims[self.index(name)]
        return self.operator(name, np.diag(np.arange(d, dtype=float)))

    def expect(self, op: np.ndarray) -> float:
        return float(np.real(np.trace(op @ self.matrix)))

    def population(self, name: str) -> float:
        return self.expect(self.number(name))

    def reduced(self, keep: Sequence[str]) -> np.ndarray:
        """Reduced density matrix on ``keep`` (in the given order)."""
        idx = [self.index(n) for n in keep]
        n = len(self.dims)
        t = self.matrix.reshape(self.dims + self.dims)
        traced = [i for i in range(n) if i not in idx]
        # move kept axes first, traced axes last, then contract the traced pairs
        perm = idx + traced + [n + i for i in idx] + [n + i for i in traced]
        t = np.transpose(t, perm)
        dk = int(np.prod([self.dims[i] for i in idx])) if idx else 1
        dt_ = int(np.prod([self.dims[i] for i in traced])) if traced else 1
        t = t.reshape(dk, dt_, dk, dt_)
        return np.einsum("ajbj->ab", t)

    def trace_out(self, names: Sequence[str]) -> JointState:
        keep = [n for n in self.names if n not in set(names)]
        for n in names:
            self.index(n)
        return JointState(tuple(keep), tuple(self.dims[self.index(n)] for n in keep), self.reduced(keep))

    def reorder(self, names: Sequence[str]) -> JointState:
        if sorted(names) != sorted(self.names):
            raise ParameterError(f"reorder needs a permutation of {self.names}")
        return JointState(tuple(names), tuple(self.dims[self.index(n)] for n in names), self.reduced(names))

    def with_subsystems(self, parts: Sequence[tuple[str, int, object]]) -> JointState:
        """Append new subsystems in the given local states."""
        extra = JointState.product(parts)
        return JointState(self.names + extra.names, self.dims + extra.dims, np.kron(self.matrix, extra.matrix))

    def renamed(self, mapping: Mapping[str, str]) -> JointState:
        names = tuple(mapping.get(n, n) for n in self.names)
        return JointState(names, self.dims, self.matrix)

    def apply_unitary(self, u: np.ndarray) -> JointState:
        return JointState(self.names, self.dims, u @ self.matrix @ u.conj().T)


def _local_density(local, dim: int) -> np.ndarray:
    if isinstance(local, (int, np.integer)):
        if not 0 <= local < dim:
            raise ParameterError(f"level {local} outside dimension {dim}")
        v = np.zeros(dim, dtype=complex)
        v[local] = 1.0
        return np.outer(v, v.conj())
    a = np.asarray(local, dtype=complex)
    if a.shape == (dim,):
        a = a / np.linalg.norm(a)
        return np.outer(a, a.conj())
    if a.shape == (dim, dim):
        return a
    raise ParameterError(f"cannot interpret local state of shape {a.shape} for dimension {dim}")


def qubit_phase(state: JointState, name: str, phi: float) -> JointState:
    """Imprint ``exp(i phi)`` on the excited level of a qubit."""
    d = state.dims[state.index(name)]
    return state.apply_unitary(state.operator(name, np.diag(np.exp(1j * phi * np.arange(d)))))


def apply_mode_loss(state: JointState, name: str, survival: float) -> JointState:
    """Amplitude damping of one mode to ``survival`` of its population."""
    d = state.dims[state.index(name)]
    out = np.zeros_like(state.matrix)
    for k in damping_kraus(survival, d - 1):
        K = state.operator(name, k)
        out += K @ state.matrix @ K.conj().T
    return JointState(state.names, state.dims, out)


def apply_beamsplitter(state: JointState, mode_a: str, mode_b: str, bs: Beamsplitter) -> JointState:
    """Beamsplitter between two modes of equal dimension (a and b are its two ports)."""
    ia, ib = state.index(mode_a), state.index(mode_b)
    d = state.dims[ia]
    if state.dims[ib] != d:
        raise ParameterError("beamsplitter ports need equal truncation")
    n_max = d - 1
    lift = fock_lift(bs_mode_matrix(bs), n_max)
    basis = fock_basis(n_max)
    # two-mode operator on the d x d product basis; states beyond n_max total stay put
    two = np.eye(d * d, dtype=complex)
    pos = [na * d + nb for na, nb in basis]
    two[np.ix_(pos, pos)] = lift
    over = [na * d + nb for na in range(d) for nb in range(d) if na + nb > n_max]
    if over:
        reduced = state.reduced([mode_a, mode_b])
        leak = float(np.real(np.sum(np.diag(reduced)[over])))
        if leak > 1e-9:
            raise ParameterError(f"modes carry {leak:.2e} population above the {n_max}-quantum cutoff")
    order = [n for n in state.names if n not in (mode_a, mode_b)]
    s = state.reorder([mode_a, mode_b] + order)
    rest = int(np.prod(s.dims[2:])) if order else 1
    s = s.apply_unitary(np.kron(two, np.eye(rest)))
    return s.reorder(state.names)


def thermal_dump(state: JointState, qubit: str) -> JointState:
    """Reset one qubit to its ground state, leaving everything else untouched."""
    d = state.dims[state.index(qubit)]
    others = [n for n in state.names if n != qubit]
    rest = state.trace_out([qubit])
    out = rest.with_subsystems([(qubit, d, 0)])
    return out.reorder(state.names) if others else out


# ---------------------------------------------------------------------------
# chain elements


@dataclass(frozen=True)
class InputMode:
    """Virtual cavity releasing its content with the shape of ``packet``."""

    name: str
    packet: Wavepacket


@dataclass(frozen=True)
class OutputMode:
    """Virtual cavity absorbing the component of the field in ``packet``."""

    name: str
    packet: Wavepacket


@dataclass(frozen=True)
class Emitter:
    """Qubit coupled to the channel at rate ``schedule.kappa``."""

    name: str
    schedule: CouplerSchedule


@dataclass(frozen=True)
class Loss:
    survival: float

    def __post_init__(self):
        if not 0 <= self.survival <= 1:
            raise ParameterError(f"survival must lie in [0, 1], got {self.survival}")


Element = Union[InputMode, OutputMode, Emitter, Loss]


def _sample_packet(p: Wavepacket, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Amplitude and population released before ``t`` (midpoint-consistent)."""
    tt = p.times
    amp = np.interp(t, tt, p.amplitude.real, left=0.0, right=0.0) + 1j * np.interp(
        t, tt, p.amplitude.imag, left=0.0, right=0.0
    )
    I = p.intensity()
    cum = np.cumsum(I) * p.grid.dt - 0.5 * I * p.grid.dt
    before = np.interp(t, tt, cum, left=0.0, right=1.0)
    return amp, before


def _coefficient(el: Element, t: np.ndarray) -> np.ndarray:
    if isinstance(el, Emitter):
        return np.sqrt(el.schedule.at(t)).astype(complex)
    amp, before = _sample_packet(el.packet, t)
    if isinstance(el, InputMode):
        return amp / np.sqrt(np.maximum(1.0 - before, DENOM_CLAMP))
    return -amp / np.sqrt(np.maximum(before, DENOM_CLAMP))


# ---------------------------------------------------------------------------
# simulation


@dataclass(frozen=True)
class SimulationTrace:
    times: np.ndarray
    p_q1: np.ndarray
    p_q2: np.ndarray
    p_ee: np.ndarray
    populations: dict = field(default_factory=dict, repr=False)
    outflow: dict = field(default_factory=dict, repr=False)
    final: JointState | None = field(default=None, repr=False)
    dt_used: float = 0.0
    trace_drift: float = 0.0

    def to_rows(self) -> list[list[float]]:
        return [[float(t), float(a), float(b), float(c)] for t, a, b, c in zip(self.times, self.p_q1, self.p_q2, self.p_ee)]

    @staticmethod
    def concatenate(traces: Sequence[SimulationTrace]) -> SimulationTrace:
        keys = set().union(*(t.populations.keys() for t in traces))
        pops = {
            k: np.concatenate([t.populations.get(k, np.full(len(t.times), np.nan)) for t in traces]) for k in keys
        }
        okeys = set().union(*(t.outflow.keys() for t in traces))
        flows = {
            k: np.concatenate([t.outflow.get(k, np.zeros(len(t.times))) for t in traces]) for k in okeys
        }
        return SimulationTrace(
            np.concatenate([t.times for t in traces]),
            np.concatenate([t.p_q1 for t in traces]),
            np.concatenate([t.p_q2 for t in traces]),
            np.concatenate([t.p_ee for t in traces]),
            pops,
            flows,
            traces[-1].final,
            min(t.dt_used for t in traces),
            max(t.trace_drift for t in traces),
        )


@dataclass
class CascadeConfig:
    """One integration stage.

    ``channels`` maps a channel label to its ordered element chain; the
    outflow of each channel (quanta leaving past its last element) is
    tracked under that label. ``qubits`` assigns decoherence parameters to
    qubit subsystems and ``q1``/``q2`` name the qubits reported in the trace.
    """

    state: JointState
    grid: TimeGrid
    channels: Mapping[str, Sequence[Element]] = field(default_factory=dict)
    qubits: Mapping[str, QubitParams] = field(default_factory=dict)
    detunings: Mapping[str, float] = field(default_factory=dict)  # rad/ns on the excited level
    dephasing: str = "ramsey"
    n_excitations: int | None = None
    sample_every: float = 1.0  # ns
    q1: str = "q1"
    q2: str = "q2"
    max_halvings: int = 3


class _Generator:
    """Right-hand side of the master equation on the truncated subspace."""

    def __init__(self, cfg: CascadeConfig, keep: np.ndarray):
        st = cfg.state
        self.keep = keep

        def restrict(op):
            return op[np.ix_(keep, keep)]

        self.chains = []
        for label, chain in cfg.channels.items():
            ops = []
            for el in chain:
                if isinstance(el, Loss):
                    ops.append((el, None))
                else:
                    d = st.dims[st.index(el.name)]
                    ops.append((el, restrict(st.operator(el.name, _lowering(d)))))
            self.chains.append((label, ops))

        dim = len(keep)
        h0 = np.zeros((dim, dim), dtype=complex)
        for name, w in cfg.detunings.items():
            h0 += w * restrict(st.number(name))
        self.static_jumps = []  # (matrix, is_diagonal_vector)
        for name, q in cfg.qubits.items():
            d = st.dims[st.index(name)]
            g1 = q.relaxation_rate
            gphi = q.dephasing_rate(cfg.dephasing)
            if g1 > 0:
                self.static_jumps.append(math.sqrt(g1) * restrict(st.operator(name, _lowering(d))))
            if gphi > 0:
                n = np.real(np.diag(restrict(st.number(name))))
                self.static_jumps.append(math.sqrt(2 * gphi) * n)  # diagonal jump stored as a vector
        self.h_static = h0 - 0.5j * sum(
            (np.diag(j**2).astype(complex) if j.ndim == 1 else j.conj().T @ j) for j in self.static_jumps
        ) if self.static_jumps else h0

    def coefficients(self, t: np.ndarray) -> list[list[np.ndarray | None]]:
        return [[None if isinstance(el, Loss) else _coefficient(el, t) for el, _ in ops] for _, ops in self.chains]

    def channel_operators(self, coefs, k: int):
        """Hamiltonian, jumps and the final outflow operator of each chain at sample ``k``."""
        H = self.h_static.copy()
        jumps = []
        outs = []
        for (label, ops), cs in zip(self.chains, coefs):
            up = None
            for (el, op), c in zip(ops, cs):
                if isinstance(el, Loss):
                    if up is not None:
                        jumps.append(math.sqrt(1 - el.survival) * up)
                        up = math.sqrt(el.survival) * up
                    continue
                L = c[k] * op
                if up is not None:
                    H += 0.5j * (up.conj().T @ L - L.conj().T @ up)
                    up = up + L
                else:
                    up = L
            if up is not None:
                jumps.append(up)
                outs.append((label, up))
        for J in jumps:
            H -= 0.5j * (J.conj().T @ J)
        return H, jumps, outs

    def rhs(self, rho, H, jumps):
        d = -1j * (H @ rho - rho @ H.conj().T)
        for J in jumps:
            d += J @ rho @ J.conj().T
        for J in self.static_jumps:
            if J.ndim == 1:
                d += np.outer(J, J) * rho
            else:
                d += J @ rho @ J.conj().T
        return d


def _integrate(cfg: CascadeConfig, dt: float) -> SimulationTrace:
    st = cfg.state
    n_exc = cfg.n_excitations
    levels = np.indices(st.dims).reshape(len(st.dims), -1).T.sum(axis=1)
    if n_exc is None:
        occupied = np.flatnonzero(np.abs(st.matrix).sum(axis=1) > 1e-14)
        n_exc = int(levels[occupied].max()) if occupied.size else 0
    keep = np.flatnonzero(levels <= n_exc)
    outside = np.setdiff1d(np.arange(len(levels)), keep)
    if outside.size and np.abs(st.matrix[np.ix_(outside, outside)]).max(initial=0) > 1e-12:
        raise ParameterError(f"initial state has population above {n_exc} excitations")

    gen = _Generator(cfg, keep)
    g = cfg.grid
    n_steps = int(round((g.t_end - g.t_start) / dt))
    t_nodes = g.t_start + dt * np.arange(2 * n_steps + 1) / 2.0  # full and half steps
    coefs = gen.coefficients(t_nodes)
    every = max(1, int(round(cfg.sample_every / dt)))

    rho = st.matrix[np.ix_(keep, keep)].copy()
    n_ops = {name: np.real(np.diag(st.number(name)))[keep] for name in st.names}
    nq1 = n_ops.get(cfg.q1)
    nq2 = n_ops.get(cfg.q2)
    pee_diag = nq1 * nq2 if (nq1 is not None and nq2 is not None) else None

    times, samples, flows_t = [], [], []
    flow_acc = {label: 0.0 for label, _ in gen.chains}

    def record(t, rho):
        d = np.real(np.diag(rho))
        times.append(t)
        samples.append({name: float(d @ n) for name, n in n_ops.items()} | (
            {"__pee": float(d @ pee_diag)} if pee_diag is not None else {}))
        flows_t.append(dict(flow_acc))

    record(g.t_start, rho)
    H2, J2, O2 = gen.channel_operators(coefs, 0)
    for s in range(n_steps):
        H0, J0, O0 = H2, J2, O2
        H1, J1, _ = gen.channel_operators(coefs, 2 * s + 1)
        H2, J2, O2 = gen.channel_operators(coefs, 2 * s + 2)
        k1 = gen.rhs(rho, H0, J0)
        k2 = gen.rhs(rho + 0.5 * dt * k1, H1, J1)
        k3 = gen.rhs(rho + 0.5 * dt * k2, H1, J1)
        k4 = gen.rhs(rho + dt * k3, H2, J2)
        new = rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        # trapezoidal accumulation of the flux leaving each channel
        for (label, a), (_, b) in zip(O0, O2):
            fa = np.real(np.trace(a @ rho @ a.conj().T))
            fb = np.real(np.trace(b @ new @ b.conj().T))
            flow_acc[label] += 0.5 * dt * (fa + fb)
        rho = 0.5 * (new + new.conj().T)
        if (s + 1) % every == 0 or s + 1 == n_steps:
            record(g.t_start + (s + 1) * dt, rho)

    drift = abs(np.trace(rho).real - np.trace(st.matrix).real)
    if drift > TRACE_TOL:
        raise ConvergenceError(f"trace drift {drift:.2e} at dt={dt}")

    full = np.zeros_like(st.matrix)
    full[np.ix_(keep, keep)] = rho
    pops = {name: np.array([smp[name] for smp in samples]) for name in st.names}
    zeros = np.zeros(len(times))
    p1 = pops.get(cfg.q1, zeros)
    p2 = pops.get(cfg.q2, zeros)
    pee = np.array([smp["__pee"] for smp in samples]) if pee_diag is not None else zeros
    flows = {label: np.array([f[label] for f in flows_t]) for label in flow_acc}
    return SimulationTrace(
        np.asarray(times), np.clip(p1, 0, 1), np.clip(p2, 0, 1), np.clip(pee, 0, 1),
        pops, flows, JointState(st.names, st.dims, full), dt, drift,
    )


def simulate_cascade(cfg: CascadeConfig) -> SimulationTrace:
    """Integrate one stage with RK4; halves ``dt`` on trace drift."""
    dt = cfg.grid.dt
    last = None
    for _ in range(cfg.max_halvings + 1):
        try:
            return _integrate(cfg, dt)
        except ConvergenceError as exc:
            last = exc
            dt /= 2
    raise ConvergenceError(f"cascade integration failed after {cfg.max_halvings} halvings: {last}")

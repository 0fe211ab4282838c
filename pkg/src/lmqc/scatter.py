"""Beamsplitter scattering of few-phonon Fock states.

Mode matrices act on creation operators: ``c_in^dag -> sum_out U[out, in] c_out^dag``.
Mode ``a`` is the output channel heading back to Q1 and ``b`` the channel
heading to Q2; a phonon entering from Q1's side arrives in input port ``a``.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import GridError, ParameterError
from .temporal_mode import SpectralAmplitude, Wavepacket, delayed, overlap, spectral_overlap


@dataclass(frozen=True)
class Beamsplitter:
    eta: float
    reflection_phase: float = math.pi / 2

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ParameterError(f"reflectivity must lie in [0, 1], got {self.eta}")


def bs_mode_matrix(bs: Beamsplitter) -> np.ndarray:
    """Symmetric mode matrix; transmission carries ``theta - pi/2`` so any phase stays unitary."""
    r = math.sqrt(bs.eta) * np.exp(1j * bs.reflection_phase)
    t = math.sqrt(1.0 - bs.eta) * np.exp(1j * (bs.reflection_phase - math.pi / 2))
    return np.array([[r, t], [t, r]], dtype=complex)


@lru_cache(maxsize=None)
def fock_basis(n_max: int) -> tuple[tuple[int, int], ...]:
    """Occupations ``(n_a, n_b)`` with ``n_a + n_b <= n_max``, grouped by total number."""
    return tuple((n - k, k) for n in range(n_max + 1) for k in range(n + 1))


def fock_lift(u: np.ndarray, n_max: int) -> np.ndarray:
    """Unitary induced by the 2x2 mode matrix ``u`` on the truncated two-mode Fock space."""
    basis = fock_basis(n_max)
    index = {occ: i for i, occ in enumerate(basis)}
    out = np.zeros((len(basis), len(basis)), dtype=complex)
    for col, (na, nb) in enumerate(basis):
        # (u00 a + u10 b)^na (u01 a + u11 b)^nb, as coefficients of a^k b^(n-k)
        poly = np.zeros((na + nb + 1,), dtype=complex)
        poly[0] = 1.0  # poly[j] = coefficient of b^j a^(deg - j)
        deg = 0
        for _ in range(na):
            poly = _mul_linear(poly, deg, u[0, 0], u[1, 0])
            deg += 1
        for _ in range(nb):
            poly = _mul_linear(poly, deg, u[0, 1], u[1, 1])
            deg += 1
        norm_in = math.sqrt(math.factorial(na) * math.factorial(nb))
        for j in range(deg + 1):
            ka, kb = deg - j, j
            out[index[(ka, kb)], col] = poly[j] * math.sqrt(math.factorial(ka) * math.factorial(kb)) / norm_in
    return out


def _mul_linear(poly: np.ndarray, deg: int, ca: complex, cb: complex) -> np.ndarray:
    new = np.zeros_like(poly)
    new[: deg + 1] += ca * poly[: deg + 1]
    new[1 : deg + 2] += cb * poly[: deg + 1]
    return new


def _check_density(m: np.ndarray, what: str, trace_tol=1e-9, herm_tol=1e-12, eig_tol=-1e-9) -> None:
    if abs(np.trace(m) - 1.0) > trace_tol:
        raise ParameterError(f"{what}: trace {np.trace(m).real:.12f} != 1")
    if np.max(np.abs(m - m.conj().T)) > herm_tol:
        raise ParameterError(f"{what}: matrix is not Hermitian")
    if np.min(np.linalg.eigvalsh(0.5 * (m + m.conj().T))) < eig_tol:
        raise ParameterError(f"{what}: matrix has negative eigenvalues")


@dataclass(frozen=True)
class TwoModeFockDensity:
    """Density operator on two bosonic channels truncated at ``n_max`` total phonons."""

    matrix: np.ndarray = field(repr=False)
    n_max: int = 2

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        dim = len(fock_basis(self.n_max))
        if m.shape != (dim, dim):
            raise ParameterError(f"expected {dim}x{dim} matrix for n_max={self.n_max}, got {m.shape}")
        _check_density(m, "TwoModeFockDensity")
        m = 0.5 * (m + m.conj().T)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def basis(self) -> tuple[tuple[int, int], ...]:
        return fock_basis(self.n_max)

    @classmethod
    def fock(cls, n_a: int, n_b: int, n_max: int = 2) -> TwoModeFockDensity:
        return cls.from_amplitudes({(n_a, n_b): 1.0}, n_max)

    @classmethod
    def from_amplitudes(cls, amps: dict, n_max: int = 2) -> TwoModeFockDensity:
        basis = fock_basis(n_max)
        v = np.zeros(len(basis), dtype=complex)
        for occ, c in amps.items():
            v[basis.index(tuple(occ))] = c
        v /= np.linalg.norm(v)
        return cls(np.outer(v, v.conj()), n_max)

    def probability(self, n_a: int, n_b: int) -> float:
        return float(self.matrix[self.basis.index((n_a, n_b)), self.basis.index((n_a, n_b))].real)

    def populations(self) -> dict[tuple[int, int], float]:
        d = np.real(np.diag(self.matrix))
        return {occ: float(p) for occ, p in zip(self.basis, d)}

    def mean_numbers(self) -> tuple[float, float]:
        pops = self.populations()
        return (sum(na * p for (na, _), p in pops.items()), sum(nb * p for (_, nb), p in pops.items()))

    def amplitude_vector(self) -> np.ndarray:
        """State vector of a pure state (global phase fixed by the largest component)."""
        w, v = np.linalg.eigh(self.matrix)
        if w[-1] < 1 - 1e-9:
            raise ParameterError("state is mixed")
        vec = v[:, -1]
        k = np.argmax(np.abs(vec))
        return vec * np.exp(-1j * np.angle(vec[k]))


def apply_unitary(state: TwoModeFockDensity, u_fock: np.ndarray) -> TwoModeFockDensity:
    return TwoModeFockDensity(u_fock @ state.matrix @ u_fock.conj().T, state.n_max)


def apply_bs_fock(state: TwoModeFockDensity, bs: Beamsplitter) -> TwoModeFockDensity:
    return apply_unitary(state, fock_lift(bs_mode_matrix(bs), state.n_max))


def phase_shift(state: TwoModeFockDensity, phi_a: float = 0.0, phi_b: float = 0.0) -> TwoModeFockDensity:
    ph = np.array([np.exp(1j * (na * phi_a + nb * phi_b)) for na, nb in state.basis])
    return TwoModeFockDensity(ph[:, None] * state.matrix * ph.conj()[None, :], state.n_max)


@dataclass(frozen=True)
class LossChannel:
    survival_a: float = 1.0
    survival_b: float = 1.0

    def __post_init__(self):
        for s in (self.survival_a, self.survival_b):
            if not 0.0 <= s <= 1.0:
                raise ParameterError(f"survival probability must lie in [0, 1], got {s}")

    @classmethod
    def from_travel(cls, t_a_us: float, t_b_us: float, tau_ph_us: float) -> LossChannel:
        """Survivals ``exp(-t_travel / tau_ph)`` for the two channels."""
        if tau_ph_us <= 0:
            raise ParameterError("phonon lifetime must be positive")
        return cls(math.exp(-t_a_us / tau_ph_us), math.exp(-t_b_us / tau_ph_us))

    def then(self, other: LossChannel) -> LossChannel:
        return LossChannel(self.survival_a * other.survival_a, self.survival_b * other.survival_b)


def damping_kraus(survival: float, n_max: int) -> list[np.ndarray]:
    """Single-mode amplitude-damping Kraus operators on ``|0..n_max>``; index k = phonons lost."""
    ops = []
    for k in range(n_max + 1):
        K = np.zeros((n_max + 1, n_max + 1))
        for n in range(k, n_max + 1):
            K[n - k, n] = math.sqrt(math.comb(n, k) * survival ** (n - k) * (1 - survival) ** k)
        ops.append(K)
    return ops


def apply_loss(state: TwoModeFockDensity, loss: LossChannel) -> TwoModeFockDensity:
    basis = state.basis
    index = {occ: i for i, occ in enumerate(basis)}
    ka = damping_kraus(loss.survival_a, state.n_max)
    kb = damping_kraus(loss.survival_b, state.n_max)
    out = np.zeros_like(state.matrix)
    for Ka in ka:
        for Kb in kb:
            K = np.zeros((len(basis), len(basis)))
            for col, (na, nb) in enumerate(basis):
                for row, (ma, mb) in enumerate(basis):
                    K[row, col] = Ka[ma, na] * Kb[mb, nb]
            if np.any(K):
                out += K @ state.matrix @ K.T
    return TwoModeFockDensity(out, state.n_max)


def _p11(eta: float, mode_overlap_sq: float) -> float:
    p = 1 - 2 * eta + 2 * eta**2 + (2 * eta**2 - 2 * eta) * mode_overlap_sq
    return min(1.0, max(0.0, p))


def coincidence_probability_time(phi1: Wavepacket, phi2: Wavepacket, tau: float, eta: float,
                                 method: str = "linear") -> float:
    """Probability of one phonon in each output for inputs ``phi1`` delayed by ``tau`` and ``phi2``.

    Complex packets enter through ``|<phi1(t - tau)|phi2(t)>|^2``.
    """
    if not 0 <= eta <= 1:
        raise ParameterError(f"reflectivity must lie in [0, 1], got {eta}")
    ov = overlap(delayed(phi1, tau, method), phi2)
    return _p11(eta, abs(ov) ** 2)


def coincidence_probability_freq(s1: SpectralAmplitude, s2: SpectralAmplitude, tau: float, eta: float) -> float:
    if not 0 <= eta <= 1:
        raise ParameterError(f"reflectivity must lie in [0, 1], got {eta}")
    if not s1.compatible_with(s2):
        raise GridError("spectra are sampled on different frequency axes")
    first = spectral_overlap(s1, s2, tau)
    # second integral: sum conj(Phi2) Phi1 exp(i w tau) dw / 2pi, i.e. conj(first)
    w = s1.frequencies
    second = np.sum(np.conj(s2.amplitude) * s1.amplitude * np.exp(-1j * w * tau)) * s1.dw / (2 * np.pi)
    return _p11(eta, float(np.real(first * second)))


def hom_visibility(p_far: float, p_zero: float) -> float:
    if p_far <= 0:
        raise ParameterError("visibility undefined for a zero plateau")
    return (p_far - p_zero) / p_far


def mz_route(bs: Beamsplitter, delta_phi: float, loss: LossChannel = LossChannel()) -> tuple[float, float]:
    """Route ``|10>`` through BS, phase ``delta_phi`` on arm a, per-arm loss, BS again."""
    state = TwoModeFockDensity.fock(1, 0, n_max=1)
    state = apply_bs_fock(state, bs)
    state = phase_shift(state, delta_phi, 0.0)
    state = apply_loss(state, loss)
    state = apply_bs_fock(state, bs)
    return state.probability(1, 0), state.probability(0, 1)


# ---------------------------------------------------------------------------
# S-parameter records


@dataclass(frozen=True)
class SParamRecord:
    frequency: float  # GHz
    s11: complex
    s21: complex
    s22: complex
    s12: complex
    reciprocal_filled: bool = False

    def __post_init__(self):
        mags = [abs(self.s11), abs(self.s21), abs(self.s22), abs(self.s12)]
        if max(mags) > 1.0:
            warnings.warn(
                f"|S| = {max(mags):.4f} > 1 at {self.frequency} GHz for a passive device",
                RuntimeWarning,
                stacklevel=3,
            )


SPARAM_COLUMNS = ["freq_ghz", "re_s11", "im_s11", "re_s21", "im_s21", "re_s22", "im_s22", "re_s12", "im_s12"]


def read_sparams_csv(path) -> list[SParamRecord]:
    """Load S-parameters; absent s22/s12 columns are filled by reciprocity and flagged."""
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        cols = [c.strip() for c in (reader.fieldnames or [])]
        required = SPARAM_COLUMNS[:5]
        missing = [c for c in required if c not in cols]
        if missing:
            raise GridError(f"S-parameter CSV missing columns {missing}")
        has_port2 = all(c in cols for c in SPARAM_COLUMNS[5:])
        for raw in reader:
            row = {k.strip(): v for k, v in raw.items() if k is not None}
            if not any(v.strip() for v in row.values() if v):
                continue
            s11 = float(row["re_s11"]) + 1j * float(row["im_s11"])
            s21 = float(row["re_s21"]) + 1j * float(row["im_s21"])
            if has_port2:
                s22 = float(row["re_s22"]) + 1j * float(row["im_s22"])
                s12 = float(row["re_s12"]) + 1j * float(row["im_s12"])
            else:
                s22, s12 = s11, s21
            records.append(SParamRecord(float(row["freq_ghz"]), s11, s21, s22, s12, not has_port2))
    if not records:
        raise GridError(f"no S-parameter rows in {path}")
    return records


def write_sparams_csv(path, records: Sequence[SParamRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SPARAM_COLUMNS)
        for r in records:
            w.writerow([repr(r.frequency)] + [repr(float(x)) for s in (r.s11, r.s21, r.s22, r.s12) for x in (s.real, s.imag)])


def synthetic_sparams(eta_at_f0: float, f0: float = 3.925, span: float = 0.2, n: int = 201,
                      insertion_loss_db: float = 20.0, eta_curvature: float = 0.0,
                      delay_ns: float = 250.0, bs_phase: float = math.pi / 2) -> list[SParamRecord]:
    """Ideal symmetric-beamsplitter S-parameters with common propagation loss and delay.

    ``eta(f) = eta_at_f0 + eta_curvature * (f - f0)^2``; reflected and transmitted
    amplitudes differ in phase by ``bs_phase`` at every frequency.
    """
    freqs = np.linspace(f0 - span / 2, f0 + span / 2, n)
    amp = 10 ** (-insertion_loss_db / 20)
    out = []
    for f in freqs:
        eta = min(1.0, max(0.0, eta_at_f0 + eta_curvature * (f - f0) ** 2))
        prop = amp * np.exp(-2j * np.pi * f * delay_ns)
        s11 = math.sqrt(eta) * np.exp(1j * bs_phase) * prop
        s21 = math.sqrt(1 - eta) * prop
        out.append(SParamRecord(float(f), s11, s21, s11, s21))
    return out


def _wrap(angle: float) -> float:
    return float((angle + math.pi) % (2 * math.pi) - math.pi)


def eta_from_s_params(records: Sequence[SParamRecord], f0: float) -> tuple[float, float, float]:
    """Reflectivity and port phase shifts at the record nearest ``f0`` (GHz).

    Returns ``(eta, theta1, theta2)`` with ``eta = |s11|^2 / (|s11|^2 + |s21|^2)``,
    ``theta1 = arg s11 - arg s21`` and ``theta2 = arg s22 - arg s12`` wrapped to (-pi, pi].
    """
    if not records:
        raise ParameterError("no S-parameter records")
    freqs = np.array([r.frequency for r in records])
    if f0 < freqs.min() or f0 > freqs.max():
        raise ParameterError(f"f0={f0} GHz outside data range [{freqs.min()}, {freqs.max()}] GHz")
    r = records[int(np.argmin(np.abs(freqs - f0)))]
    p11, p21 = abs(r.s11) ** 2, abs(r.s21) ** 2
    if p11 + p21 == 0:
        raise ParameterError(f"zero total power at {r.frequency} GHz")
    eta = p11 / (p11 + p21)
    theta1 = _wrap(np.angle(r.s11) - np.angle(r.s21))
    theta2 = _wrap(np.angle(r.s22) - np.angle(r.s12))
    return eta, theta1, theta2

"""Readout correction, two-qubit tomography and visibility extraction.

Two-qubit outcomes are ordered (gg, ge, eg, ee) with Q1 as the left factor;
the same ordering indexes density matrices (g = 0, e = 1).
"""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ParameterError

OUTCOMES = ("gg", "ge", "eg", "ee")
MAX_CONDITION = 1e6

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
PAULI_LABELS = tuple(a + b for a, b in itertools.product("IXYZ", repeat=2))


@dataclass(frozen=True)
class TwoQubitProbVector:
    p_gg: float
    p_ge: float
    p_eg: float
    p_ee: float

    def __post_init__(self):
        for name in ("p_gg", "p_ge", "p_eg", "p_ee"):
            v = getattr(self, name)
            if not -0.05 <= v <= 1.05:
                raise ParameterError(f"{name}={v:.4f} outside [-0.05, 1.05]")
        if abs(sum(self.as_array()) - 1.0) > 1e-6:
            raise ParameterError(f"probabilities sum to {sum(self.as_array()):.9f}, not 1")

    @classmethod
    def from_array(cls, p) -> TwoQubitProbVector:
        p = np.asarray(p, dtype=float).reshape(4)
        return cls(*map(float, p))

    def as_array(self) -> np.ndarray:
        return np.array([self.p_gg, self.p_ge, self.p_eg, self.p_ee])

    @property
    def p_q1(self) -> float:
        return self.p_eg + self.p_ee

    @property
    def p_q2(self) -> float:
        return self.p_ge + self.p_ee


@dataclass(frozen=True)
class VisibilityMatrix:
    """``V[measured, prepared]``; each column is the outcome distribution of one prepared state."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (4, 4):
            raise ParameterError(f"visibility matrix must be 4x4, got {m.shape}")
        if np.any(m < 0):
            raise ParameterError("visibility matrix has negative entries")
        if np.any(np.abs(m.sum(axis=0) - 1.0) > 1e-6):
            raise ParameterError(f"columns must sum to 1, got {m.sum(axis=0)}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_prepared_rows(cls, rows) -> VisibilityMatrix:
        """Build from a table whose rows are prepared states (the transpose layout)."""
        return cls(np.asarray(rows, dtype=float).T)

    @classmethod
    def identity(cls) -> VisibilityMatrix:
        return cls(np.eye(4))

    @property
    def condition_number(self) -> float:
        return float(np.linalg.cond(self.matrix))


# Typical measured readout table, rows = prepared gg, ge, eg, ee.
DEVICE_READOUT_ROWS = (
    (0.9806, 0.0118, 0.0075, 0.0001),
    (0.0381, 0.9544, 0.0003, 0.0072),
    (0.0431, 0.0006, 0.9451, 0.0112),
    (0.0018, 0.0420, 0.0408, 0.9154),
)
DEVICE_VISIBILITY = VisibilityMatrix.from_prepared_rows(DEVICE_READOUT_ROWS)


def apply_confusion(p, v: VisibilityMatrix) -> TwoQubitProbVector:
    arr = p.as_array() if isinstance(p, TwoQubitProbVector) else np.asarray(p, dtype=float)
    return TwoQubitProbVector.from_array(v.matrix @ arr)


def correct_readout(p_meas, v: VisibilityMatrix) -> TwoQubitProbVector:
    """``V^-1 p_meas``. Negative components are kept; see :func:`clip_for_display`."""
    cond = v.condition_number
    if not cond < MAX_CONDITION:
        raise ParameterError(f"visibility matrix is ill-conditioned (condition number {cond:.3g})")
    arr = p_meas.as_array() if isinstance(p_meas, TwoQubitProbVector) else np.asarray(p_meas, dtype=float)
    return TwoQubitProbVector.from_array(np.linalg.solve(v.matrix, arr))


def clip_for_display(p: TwoQubitProbVector) -> tuple[np.ndarray, bool]:
    arr = p.as_array()
    clipped = np.clip(arr, 0.0, 1.0)
    return clipped, bool(np.any(clipped != arr))


def sample_outcomes(p, shots: int, rng: np.random.Generator) -> TwoQubitProbVector:
    """Frequencies from ``shots`` multinomial draws of the outcome distribution."""
    arr = p.as_array() if isinstance(p, TwoQubitProbVector) else np.asarray(p, dtype=float)
    arr = np.clip(arr, 0.0, None)
    counts = rng.multinomial(shots, arr / arr.sum())
    return TwoQubitProbVector.from_array(counts / shots)


# ---------------------------------------------------------------------------
# tomography


def _check_density(rho: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ParameterError(f"two-qubit density matrix must be 4x4, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ParameterError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > tol:
        raise ParameterError(f"density matrix has trace {np.trace(rho).real:.9f}")
    return rho


def pauli_operator(label: str) -> np.ndarray:
    if len(label) != 2 or any(c not in PAULI for c in label):
        raise ParameterError(f"bad two-qubit Pauli label {label!r}")
    return np.kron(PAULI[label[0]], PAULI[label[1]])


def pauli_expectations(rho: np.ndarray) -> dict[str, float]:
    rho = np.asarray(rho, dtype=complex)
    return {lab: float(np.real(np.trace(pauli_operator(lab) @ rho))) for lab in PAULI_LABELS}


def simulate_pauli_measurements(rho: np.ndarray, shots: int, rng: np.random.Generator) -> dict[str, float]:
    """Expectations estimated from the nine local settings {X,Y,Z} x {X,Y,Z}.

    Each setting is measured ``shots`` times; single-qubit expectations are
    averaged over the three settings that contain them.
    """
    rho = np.asarray(rho, dtype=complex)
    if shots <= 0:
        return pauli_expectations(rho)
    sums: dict[str, list[float]] = {lab: [] for lab in PAULI_LABELS}
    for a, b in itertools.product("XYZ", repeat=2):
        # projective outcomes (+,+), (+,-), (-,+), (-,-) in the eigenbasis of a x b
        probs = []
        for sa, sb in itertools.product((1, -1), repeat=2):
            proj = np.kron((PAULI["I"] + sa * PAULI[a]) / 2, (PAULI["I"] + sb * PAULI[b]) / 2)
            probs.append(max(float(np.real(np.trace(proj @ rho))), 0.0))
        probs = np.array(probs) / sum(probs)
        n = rng.multinomial(shots, probs) / shots
        sums[a + b].append(n[0] - n[1] - n[2] + n[3])
        sums[a + "I"].append(n[0] + n[1] - n[2] - n[3])
        sums["I" + b].append(n[0] - n[1] + n[2] - n[3])
    out = {lab: float(np.mean(v)) for lab, v in sums.items() if v}
    out["II"] = 1.0
    return out


def tomography_reconstruct(expectations: Mapping[str, float], project_psd: bool = False) -> np.ndarray:
    """Linear inversion ``rho = 1/4 sum <s_i s_j> s_i s_j``, Hermitized and trace-normalized."""
    missing = [lab for lab in PAULI_LABELS if lab != "II" and lab not in expectations]
    if missing:
        raise ParameterError(f"missing Pauli expectations: {', '.join(missing)}")
    rho = np.zeros((4, 4), dtype=complex)
    for lab in PAULI_LABELS:
        rho += expectations.get(lab, 1.0) * pauli_operator(lab)
    rho = 0.25 * rho
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    if project_psd:
        w, v = np.linalg.eigh(rho)
        w = np.clip(w, 0.0, None)
        rho = (v * w) @ v.conj().T
        rho /= np.trace(rho).real
    return rho


def min_eigenvalue(rho: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(0.5 * (rho + np.conj(rho).T)).min())


def bell_state() -> np.ndarray:
    """``(i|eg> + |ge>)/sqrt(2)`` as a density matrix."""
    psi = np.zeros(4, dtype=complex)
    psi[OUTCOMES.index("eg")] = 1j
    psi[OUTCOMES.index("ge")] = 1.0
    psi /= math.sqrt(2)
    return np.outer(psi, psi.conj())


def bell_fidelity(rho: np.ndarray, target: np.ndarray | None = None) -> float:
    """``sqrt(Tr(|target| |rho|))`` with elementwise moduli.

    Taking the modulus of the target too makes the measure phase-blind on
    both sides, so the target itself scores 1.
    """
    rho = _check_density(rho)
    target = bell_state() if target is None else _check_density(target)
    return float(math.sqrt(max(np.real(np.trace(np.abs(target) @ np.abs(rho))), 0.0)))


def state_fidelity(rho: np.ndarray, target: np.ndarray | None = None) -> float:
    """Conventional overlap ``Tr(target rho)`` for a pure target."""
    rho = _check_density(rho)
    target = bell_state() if target is None else _check_density(target)
    return float(np.real(np.trace(target @ rho)))


# ---------------------------------------------------------------------------
# visibilities


def fringe_fit(phases, values) -> tuple[float, float, float]:
    """Least-squares ``a + b cos(phi - phi0)``; returns ``(a, b, phi0)`` with ``b >= 0``."""
    x = np.asarray(phases, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.shape != y.shape or x.size < 8:
        raise ParameterError("fringe fit needs at least 8 (phase, value) samples")
    # a uniform scan of n points covers n/(n-1) times its extent
    if np.ptp(x) * x.size / (x.size - 1) < 2 * np.pi * (1 - 1e-9):
        raise ParameterError("fringe phases must span a full period")
    design = np.c_[np.ones_like(x), np.cos(x), np.sin(x)]
    (a, c, s), *_ = np.linalg.lstsq(design, y, rcond=None)
    return float(a), float(math.hypot(c, s)), float(math.atan2(s, c))


def fringe_visibility(phases, values) -> float:
    a, b, _ = fringe_fit(phases, values)
    if not a > 0:
        raise ParameterError(f"degenerate fringe fit: offset {a:.3g}")
    return b / a


def plateau_threshold(sigma: float, overlap_cut: float = 1e-3) -> float:
    """Delay beyond which two sech packets of width ``sigma`` overlap by less than ``overlap_cut``."""
    # solve x / sinh(x) = overlap_cut for x = tau / (2 sigma) by bisection
    lo, hi = 1e-6, 50.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid / math.sinh(mid) > overlap_cut:
            lo = mid
        else:
            hi = mid
    return 2 * sigma * hi


def dip_visibility(delays, p_ee, sigma: float, overlap_cut: float = 1e-3) -> float:
    """``(plateau - min) / plateau`` with the plateau averaged where packet overlap is negligible."""
    t = np.asarray(delays, dtype=float)
    y = np.asarray(p_ee, dtype=float)
    if t.shape != y.shape:
        raise ParameterError("delays and values differ in length")
    mask = np.abs(t) >= plateau_threshold(sigma, overlap_cut)
    if not mask.any():
        raise ParameterError(
            f"no plateau samples beyond |tau| = {plateau_threshold(sigma, overlap_cut):.1f} ns"
        )
    top = float(np.mean(y[mask]))
    if not top > 0:
        raise ParameterError("plateau is not positive")
    return (top - float(np.min(y))) / top


def fwhm(xs, ys, baseline: float) -> float:
    """Width at half depth (or height) between ``baseline`` and the extremum."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    dip = baseline >= np.mean(y)
    k = int(np.argmin(y) if dip else np.argmax(y))
    half = 0.5 * (baseline + y[k])

    def crossing(indices) -> float:
        prev = k
        for i in indices:
            if (y[i] - half) * (y[prev] - half) <= 0 and y[i] != y[prev]:
                f = (half - y[prev]) / (y[i] - y[prev])
                return float(x[prev] + f * (x[i] - x[prev]))
            prev = i
        raise ParameterError("curve never crosses its half level on one side")

    left = crossing(range(k - 1, -1, -1))
    right = crossing(range(k + 1, len(x)))
    return right - left


# ---------------------------------------------------------------------------
# CSV exchange


def write_matrix_csv(path, m: np.ndarray) -> None:
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"{part}_{j}" for j in range(m.shape[1]) for part in ("re", "im")])
        for row in m:
            w.writerow([repr(float(getattr(z, part))) for z in row for part in ("real", "imag")])


def read_matrix_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if len(header) % 2:
            raise ParameterError("matrix CSV needs re/im column pairs")
        rows = [[float(v) for v in r] for r in reader if r]
    a = np.asarray(rows)
    return a[:, 0::2] + 1j * a[:, 1::2]


def vector_rows(ps: Sequence[TwoQubitProbVector]) -> np.ndarray:
    return np.array([p.as_array() for p in ps])

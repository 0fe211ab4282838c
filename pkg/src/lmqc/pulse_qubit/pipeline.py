"""Fast two-phonon interference pipeline for parameter scans.

The two phonons are treated in first quantization: each lives in
(2 spatial arms) x (K orthonormal temporal modes), where the temporal basis
comes from Gram-Schmidt over the emitted packets and any detection filters.
Loss, the beamsplitter and capture act on the single-particle space; each
qubit is a click detector that saturates at one phonon. Joint probabilities
follow from no-click expectation values of the symmetric two-particle state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ParameterError
from ..scatter import Beamsplitter, bs_mode_matrix
from ..temporal_mode import (
    DEFAULT_DT,
    Wavepacket,
    common_grid,
    delayed,
    detuned,
    make_sech,
    overlap,
)
from .shaping import DEFAULT_KAPPA_MAX, ChannelGeometry, emitted_waveform, kappa_for_emission

# Empirical scale between the ideal coincidence probability and the measured
# joint excitation probability.
ALPHA_DEFAULT = 0.265


@dataclass(frozen=True)
class PipelineResult:
    p_q1: float
    p_q2: float
    p_ee: float
    mode_overlap: complex = 0j


def transit_survival(geometry: ChannelGeometry) -> float:
    """Product of the four one-way survivals (both phonons, in and out)."""
    return (geometry.survival_1 * geometry.survival_2) ** 2


def efficiency_from_alpha(alpha: float = ALPHA_DEFAULT, geometry: ChannelGeometry = ChannelGeometry()) -> float:
    """Per-qubit capture efficiency that makes ``P_ee = alpha * P11`` for broadband capture."""
    eps = math.sqrt(alpha / transit_survival(geometry))
    if not 0 < eps <= 1:
        raise ParameterError(f"alpha={alpha} needs capture efficiency {eps:.3f} outside (0, 1]")
    return eps


def pee_proxy(p11: float, alpha: float = ALPHA_DEFAULT) -> float:
    if not 0 <= p11 <= 1:
        raise ParameterError(f"p11 must lie in [0, 1], got {p11}")
    if not alpha > 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    return alpha * p11


def _orthonormal(vectors: Sequence[np.ndarray], dt: float, tol: float = 1e-9) -> np.ndarray:
    basis = []
    for v in vectors:
        w = v.astype(complex).copy()
        for _ in range(2):  # re-orthogonalize once for stability
            for e in basis:
                w -= (np.vdot(e, w) * dt) * e
        n = math.sqrt(max(np.vdot(w, w).real * dt, 0.0))
        if n > tol:
            basis.append(w / n)
    return np.array(basis)


def tail_padding(kappa_max: float) -> float:
    """Extra grid span (ns) holding the exponential tail left by a clipped coupler."""
    return 0.0 if not math.isfinite(kappa_max) else 16.0 / kappa_max


def shaped_sech(sigma: float, center: float, grid, kappa_max: float = DEFAULT_KAPPA_MAX) -> Wavepacket:
    """Waveform actually emitted when shaping a sech under the coupler cap."""
    target = make_sech(sigma, center, grid)
    if not math.isfinite(kappa_max):
        return target
    wave, _ = emitted_waveform(kappa_for_emission(target, kappa_max))
    return wave.relabel(f"emitted sech(sigma={sigma:g})")


def two_phonon_probabilities(phi1: Wavepacket, phi2: Wavepacket, bs: Beamsplitter,
                             survival_in: tuple[float, float] = (1.0, 1.0),
                             survival_out: tuple[float, float] = (1.0, 1.0),
                             efficiencies: tuple[float, float] = (1.0, 1.0),
                             filters: tuple[Wavepacket | None, Wavepacket | None] = (None, None)) -> PipelineResult:
    """Joint excitation probabilities for phonon 1 entering port a and phonon 2 entering port b.

    Port a faces Q1 and port b faces Q2 on the way out. A ``None`` filter
    means broadband capture; otherwise the qubit only absorbs the component
    of its arriving field in the filter mode.
    """
    for name, vals in (("survival_in", survival_in), ("survival_out", survival_out), ("efficiencies", efficiencies)):
        if any(not 0 <= v <= 1 for v in vals):
            raise ParameterError(f"{name} must lie in [0, 1], got {vals}")
    dt = phi1.grid.dt
    vecs = [phi1.amplitude, phi2.amplitude] + [f.amplitude for f in filters if f is not None]
    for f in filters:
        if f is not None and not f.grid.same_as(phi1.grid):
            raise ParameterError("filter packets must share the phonon grid")
    E = _orthonormal(vecs, dt)
    K = E.shape[0]
    c1 = E.conj() @ phi1.amplitude * dt
    c2 = E.conj() @ phi2.amplitude * dt

    eye = np.eye(K)
    U = np.kron(bs_mode_matrix(bs), eye)  # single-particle space: arm (a, b) x temporal mode
    A = np.kron(np.diag(np.sqrt(survival_out)), eye) @ U @ np.kron(np.diag(np.sqrt(survival_in)), eye)

    def detector(arm: int) -> np.ndarray:
        f = filters[arm]
        if f is None:
            proj = eye
        else:
            cf = E.conj() @ f.amplitude * dt
            proj = np.outer(cf, cf.conj())
        sel = np.zeros((2, 2))
        sel[arm, arm] = efficiencies[arm]
        return A.conj().T @ np.kron(sel, proj) @ A

    v1 = np.concatenate([c1, np.zeros(K)])
    v2 = np.concatenate([np.zeros(K), c2])
    psi = (np.outer(v1, v2) + np.outer(v2, v1)) / math.sqrt(2)

    def no_click(op: np.ndarray) -> float:
        M = np.eye(2 * K) - op
        return float(np.real(np.vdot(psi, M @ psi @ M.T)))

    Ma, Mb = detector(0), detector(1)
    pa, pb, pab = no_click(Ma), no_click(Mb), no_click(Ma + Mb)
    p_q1 = 1 - pa
    p_q2 = 1 - pb
    p_ee = 1 - pa - pb + pab
    clip = lambda x: min(1.0, max(0.0, x))  # noqa: E731
    return PipelineResult(clip(p_q1), clip(p_q2), clip(p_ee), overlap(phi1, phi2))


def hom_pipeline(sigma1: float, sigma2: float, tau: float, delta_f: float = 0.0,
                 geometry: ChannelGeometry = ChannelGeometry(), eta: float = 0.61,
                 efficiencies: tuple[float, float] | None = None, alpha: float = ALPHA_DEFAULT,
                 reflection_phase: float = math.pi / 2, kappa_max: float = DEFAULT_KAPPA_MAX,
                 dt: float = DEFAULT_DT, filters=(None, None)) -> PipelineResult:
    """Final ``(P_Q1, P_Q2, P_ee)`` for two shaped sech phonons meeting at the beamsplitter.

    ``tau`` delays phonon 1 relative to phonon 2 at the beamsplitter and
    ``delta_f`` (MHz) detunes phonon 2. Capture efficiencies default to the
    value reproducing ``alpha`` for this geometry.
    """
    if efficiencies is None:
        eps = efficiency_from_alpha(alpha, geometry)
        efficiencies = (eps, eps)
    grid = common_grid([sigma1, sigma2], [0.0, 0.0], dt, pad=abs(tau) + tail_padding(kappa_max))
    phi1 = delayed(shaped_sech(sigma1, 0.0, grid, kappa_max), tau)
    phi2 = detuned(shaped_sech(sigma2, 0.0, grid, kappa_max), delta_f)
    return two_phonon_probabilities(
        phi1, phi2, Beamsplitter(eta, reflection_phase),
        survival_in=(geometry.survival_1, geometry.survival_2),
        survival_out=(geometry.survival_1, geometry.survival_2),
        efficiencies=efficiencies,
        filters=filters,
    )

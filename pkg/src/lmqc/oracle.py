"""Brute-force reference computations used to cross-check the fast paths.

Nothing here calls the closed-form coincidence formula or the Kraus-based
loss channel; each routine rebuilds its answer from creation operators,
adaptive quadrature or an explicit environment mode.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence, Union

import numpy as np
from scipy import integrate, linalg

from .errors import ConvergenceError, ParameterError
from .temporal_mode import Wavepacket, delayed


# ---------------------------------------------------------------------------
# two-phonon interference in a 4-mode Fock space


def _gram_schmidt(vectors: Sequence[np.ndarray], dt: float, tol: float = 1e-10) -> list[np.ndarray]:
    basis: list[np.ndarray] = []
    for v in vectors:
        w = v.astype(complex).copy()
        for e in basis:
            w -= (np.vdot(e, w) * dt) * e
        n = math.sqrt(max(np.vdot(w, w).real * dt, 0.0))
        if n > tol:
            basis.append(w / n)
    return basis


def _fock_states(n_modes: int, n_total: int) -> list[tuple[int, ...]]:
    return [occ for occ in itertools.product(range(n_total + 1), repeat=n_modes) if sum(occ) <= n_total]


def _creation_ops(n_modes: int, n_total: int) -> list[np.ndarray]:
    states = _fock_states(n_modes, n_total)
    index = {s: i for i, s in enumerate(states)}
    ops = []
    for k in range(n_modes):
        op = np.zeros((len(states), len(states)))
        for s in states:
            if sum(s) < n_total:
                t = list(s)
                t[k] += 1
                op[index[tuple(t)], index[s]] = math.sqrt(s[k] + 1)
        ops.append(op)
    return ops


def brute_force_p11(phi1: Wavepacket, phi2: Wavepacket, tau: float, eta: float,
                    reflection_phase: float = math.pi / 2, method: str = "linear") -> float:
    """Coincidence probability from an explicit (2 spatial x 2 temporal)-mode Fock calculation."""
    if not 0 <= eta <= 1:
        raise ParameterError(f"reflectivity must lie in [0, 1], got {eta}")
    dt = phi1.grid.dt
    x1 = delayed(phi1, tau, method).amplitude
    x2 = phi2.amplitude
    modes = _gram_schmidt([x1, x2], dt)
    c1 = np.array([np.vdot(e, x1) * dt for e in modes])
    c2 = np.array([np.vdot(e, x2) * dt for e in modes])
    k = len(modes)
    # mode order: a_0..a_{k-1}, b_0..b_{k-1}
    ops = _creation_ops(2 * k, 2)
    r = math.sqrt(eta) * np.exp(1j * reflection_phase)
    t = math.sqrt(1 - eta) * np.exp(1j * (reflection_phase - math.pi / 2))

    def a_out(j):  # image of a_j^dag under the beamsplitter
        return r * ops[j] + t * ops[k + j]

    def b_out(j):
        return t * ops[j] + r * ops[k + j]

    A = sum(c1[j] * a_out(j) for j in range(k))
    B = sum(c2[j] * b_out(j) for j in range(k))
    vac = np.zeros(ops[0].shape[0], dtype=complex)
    vac[0] = 1.0
    psi = A @ (B @ vac)
    states = _fock_states(2 * k, 2)
    p = 0.0
    for amp, occ in zip(psi, states):
        if sum(occ[:k]) == 1 and sum(occ[k:]) == 1:
            p += abs(amp) ** 2
    return float(p)


# ---------------------------------------------------------------------------
# adaptive-quadrature overlaps of analytic packets


@dataclass(frozen=True)
class AnalyticSech:
    sigma: float
    center: float = 0.0
    detuning_mhz: float = 0.0

    def __call__(self, t):
        x = (np.asarray(t) - self.center) / (2 * self.sigma)
        return np.exp(-2j * np.pi * self.detuning_mhz * 1e-3 * np.asarray(t)) / (np.sqrt(4 * self.sigma) * np.cosh(x))

    def support(self):
        return self.center - 40 * self.sigma, self.center + 40 * self.sigma


@dataclass(frozen=True)
class AnalyticGaussian:
    s: float  # intensity standard deviation
    center: float = 0.0
    detuning_mhz: float = 0.0

    def __call__(self, t):
        t = np.asarray(t)
        norm = (2 * np.pi * self.s**2) ** -0.25
        return norm * np.exp(-((t - self.center) ** 2) / (4 * self.s**2) - 2j * np.pi * self.detuning_mhz * 1e-3 * t)

    def support(self):
        return self.center - 20 * self.s, self.center + 20 * self.s


@dataclass(frozen=True)
class AnalyticBins:
    parts: tuple
    weights: tuple

    def __call__(self, t):
        raw = sum(complex(w) * p(t) for w, p in zip(self.weights, self.parts))
        return raw / math.sqrt(self._raw_norm)

    @cached_property
    def _raw_norm(self) -> float:
        total = 0.0
        for (wi, pi), (wj, pj) in itertools.product(zip(self.weights, self.parts), repeat=2):
            total += (np.conj(complex(wi)) * complex(wj) * quadrature_overlap(pi, pj)).real
        if total <= 0:
            raise ParameterError("time-bin superposition has zero norm")
        return total

    def support(self):
        lo = min(p.support()[0] for p in self.parts)
        hi = max(p.support()[1] for p in self.parts)
        return lo, hi


AnalyticPacket = Union[AnalyticSech, AnalyticGaussian, AnalyticBins]


def _breakpoints(f) -> list[float]:
    if isinstance(f, AnalyticBins):
        return [c for p in f.parts for c in _breakpoints(p)]
    return [f.center]


def quadrature_overlap(f: AnalyticPacket, g: AnalyticPacket, tau: float = 0.0,
                       rtol: float = 1e-10) -> complex:
    """``int conj(f(t - tau)) g(t) dt`` by adaptive Gauss-Kronrod quadrature."""
    lo = min(f.support()[0] + tau, g.support()[0])
    hi = max(f.support()[1] + tau, g.support()[1])
    cuts = sorted({lo, hi, *[c + tau for c in _breakpoints(f)], *_breakpoints(g)})
    cuts = [c for c in cuts if lo <= c <= hi]

    def re(t):
        return float(np.real(np.conj(f(t - tau)) * g(t)))

    def im(t):
        return float(np.imag(np.conj(f(t - tau)) * g(t)))

    total = 0j
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            for a, b in zip(cuts[:-1], cuts[1:]):
                vr, _ = integrate.quad(re, a, b, epsabs=1e-14, epsrel=rtol, limit=400)
                vi, _ = integrate.quad(im, a, b, epsabs=1e-14, epsrel=rtol, limit=400)
                total += vr + 1j * vi
        except integrate.IntegrationWarning as exc:
            raise ConvergenceError(f"quadrature did not converge: {exc}") from exc
    return complex(total)


# ---------------------------------------------------------------------------
# loss by explicit environment mode


def loss_trace_oracle(n: int, survival: float, n_max: int = 2) -> dict[int, float]:
    """Occupation distribution after mixing ``|n>`` with a vacuum ancilla and tracing it out."""
    if not 0 <= n <= n_max:
        raise ParameterError(f"occupation {n} outside [0, {n_max}]")
    if not 0 <= survival <= 1:
        raise ParameterError(f"survival must lie in [0, 1], got {survival}")
    d = n_max + 1
    a = np.diag(np.sqrt(np.arange(1, d)), 1)  # single-mode annihilation
    eye = np.eye(d)
    c = np.kron(a, eye)  # channel
    e = np.kron(eye, a)  # environment
    theta = math.acos(math.sqrt(survival))
    U = linalg.expm(theta * (c.conj().T @ e - e.conj().T @ c))
    psi0 = np.zeros(d * d)
    psi0[n * d + 0] = 1.0
    psi = (U @ psi0).reshape(d, d)  # [channel, environment]
    probs = np.sum(np.abs(psi) ** 2, axis=1)
    return {k: float(probs[k]) for k in range(d) if probs[k] > 1e-15 or k == n}

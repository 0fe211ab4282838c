"""Normalized complex temporal wavepackets on uniform time grids.

Times are in ns, amplitudes in ns^-1/2, detunings in MHz and angular
frequencies in rad/ns. Every ``Wavepacket`` is unit norm under the
rectangle rule ``sum(|phi|^2) * dt`` used by :func:`overlap`.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import GridError

# Fraction of a packet's norm allowed to fall outside the grid.
TRUNCATION_TOL = 1e-6
# Default grid half-span in units of sigma. The sech^2 tail beyond
# +/-15 sigma holds 1 - tanh(7.5) ~ 6e-7 of the norm.
DEFAULT_SPAN_SIGMAS = 15.0
DEFAULT_DT = 0.1


@dataclass(frozen=True)
class TimeGrid:
    t_start: float
    dt: float
    n_samples: int

    def __post_init__(self):
        if not self.dt > 0:
            raise GridError(f"dt must be positive, got {self.dt}")
        if self.n_samples < 2:
            raise GridError(f"need at least 2 samples, got {self.n_samples}")
        object.__setattr__(self, "n_samples", int(self.n_samples))

    @classmethod
    def spanning(cls, t_min: float, t_max: float, dt: float = DEFAULT_DT) -> TimeGrid:
        """Smallest grid with step ``dt`` starting at ``t_min`` and reaching ``t_max``."""
        if t_max <= t_min:
            raise GridError(f"empty interval [{t_min}, {t_max}]")
        n = int(math.ceil((t_max - t_min) / dt - 1e-9)) + 1
        return cls(float(t_min), float(dt), n)

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.n_samples)

    @property
    def t_end(self) -> float:
        return self.t_start + self.dt * (self.n_samples - 1)

    def same_as(self, other: TimeGrid) -> bool:
        return (
            self.n_samples == other.n_samples
            and abs(self.dt - other.dt) <= 1e-12 * self.dt
            and abs(self.t_start - other.t_start) <= 1e-9 * max(1.0, self.dt)
        )


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Wavepacket:
    """Unit-norm complex amplitude sampled on ``grid``.

    The amplitude is renormalized on construction; a zero or non-finite
    amplitude is rejected.
    """

    grid: TimeGrid
    amplitude: np.ndarray = field(repr=False)
    label: str = ""

    def __post_init__(self):
        amp = np.array(self.amplitude, dtype=complex).reshape(-1)
        if amp.shape[0] != self.grid.n_samples:
            raise GridError(
                f"amplitude has {amp.shape[0]} samples, grid has {self.grid.n_samples}"
            )
        if not np.all(np.isfinite(amp)):
            raise GridError("amplitude contains non-finite samples")
        norm = np.sum(np.abs(amp) ** 2) * self.grid.dt
        if not norm > 0:
            raise GridError("wavepacket has zero norm")
        object.__setattr__(self, "amplitude", _frozen(amp / math.sqrt(norm)))

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitude) ** 2) * self.grid.dt)

    def intensity(self) -> np.ndarray:
        return np.abs(self.amplitude) ** 2

    def cumulative(self) -> np.ndarray:
        """Population emitted up to and including each sample."""
        return np.cumsum(self.intensity()) * self.grid.dt

    def population_between(self, t0: float, t1: float) -> float:
        t = self.times
        mask = (t >= t0) & (t < t1)
        return float(np.sum(self.intensity()[mask]) * self.grid.dt)

    def mean_time(self) -> float:
        return float(np.sum(self.times * self.intensity()) * self.grid.dt)

    def relabel(self, label: str) -> Wavepacket:
        return Wavepacket(self.grid, self.amplitude, label)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t_ns", "re_amp", "im_amp"])
            for t, a in zip(self.times, self.amplitude):
                w.writerow([repr(float(t)), repr(float(a.real)), repr(float(a.imag))])

    @classmethod
    def from_csv(cls, path, label: str | None = None) -> Wavepacket:
        rows = []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = [h.strip() for h in next(reader)]
            if header != ["t_ns", "re_amp", "im_amp"]:
                raise GridError(f"unexpected wavepacket CSV header {header}")
            for row in reader:
                if row:
                    rows.append([float(x) for x in row])
        data = np.asarray(rows)
        if data.shape[0] < 2:
            raise GridError("wavepacket CSV needs at least two rows")
        t = data[:, 0]
        dt = t[1] - t[0]
        if not np.allclose(np.diff(t), dt, rtol=1e-9, atol=1e-9):
            raise GridError("wavepacket CSV times are not uniformly spaced")
        grid = TimeGrid(float(t[0]), float(dt), len(t))
        return cls(grid, data[:, 1] + 1j * data[:, 2], Path(path).stem if label is None else label)


@dataclass(frozen=True)
class SpectralAmplitude:
    """Continuous Fourier transform ``Phi(w) = int phi(t) exp(-i w t) dt`` sampled on ``frequencies``."""

    frequencies: np.ndarray = field(repr=False)
    amplitude: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.asarray(self.frequencies, dtype=float).reshape(-1)
        a = np.asarray(self.amplitude, dtype=complex).reshape(-1)
        if w.shape != a.shape:
            raise GridError("frequency axis and amplitude lengths differ")
        dw = np.diff(w)
        if len(w) < 2 or not np.allclose(dw, dw[0], rtol=1e-9, atol=0):
            raise GridError("frequency axis must be uniform and ascending")
        object.__setattr__(self, "frequencies", _frozen(w))
        object.__setattr__(self, "amplitude", _frozen(a))
        if abs(self.norm() - 1.0) > 1e-6:
            raise GridError(f"spectrum violates Parseval: norm {self.norm():.9f}")

    @property
    def dw(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0])

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitude) ** 2) * self.dw / (2 * np.pi))

    def compatible_with(self, other: SpectralAmplitude) -> bool:
        return self.frequencies.shape == other.frequencies.shape and np.allclose(
            self.frequencies, other.frequencies, rtol=1e-12, atol=1e-12
        )


def _require_same_grid(p: Wavepacket, q: Wavepacket) -> None:
    if not p.grid.same_as(q.grid):
        raise GridError(f"wavepackets live on different grids: {p.grid} vs {q.grid}")


def sech_grid(sigma: float, t_center: float = 0.0, dt: float = DEFAULT_DT,
              span: float = DEFAULT_SPAN_SIGMAS) -> TimeGrid:
    return TimeGrid.spanning(t_center - span * sigma, t_center + span * sigma, dt)


def make_sech(sigma: float, t_center: float, grid: TimeGrid, label: str = "") -> Wavepacket:
    """Hyperbolic-secant packet ``(4 sigma)^-1/2 sech((t - t_center) / 2 sigma)``."""
    if not sigma > 0:
        raise GridError(f"sigma must be positive, got {sigma}")
    x_lo = (grid.t_start - 0.5 * grid.dt - t_center) / (2 * sigma)
    x_hi = (grid.t_end + 0.5 * grid.dt - t_center) / (2 * sigma)
    # |phi|^2 integrates to (tanh(x_hi) - tanh(x_lo)) / 2 over the grid.
    deficit = 1.0 - 0.5 * (math.tanh(x_hi) - math.tanh(x_lo))
    if deficit > TRUNCATION_TOL:
        raise GridError(
            f"grid [{grid.t_start:.3g}, {grid.t_end:.3g}] ns truncates sech(sigma={sigma}) "
            f"centered at {t_center}: norm deficit {deficit:.2e} > {TRUNCATION_TOL:.0e}"
        )
    x = (grid.times - t_center) / (2 * sigma)
    amp = 1.0 / (np.sqrt(4 * sigma) * np.cosh(x))
    return Wavepacket(grid, amp, label or f"sech(sigma={sigma:g})")


def make_gaussian(s: float, t_center: float, grid: TimeGrid, label: str = "") -> Wavepacket:
    """Gaussian packet whose intensity |phi|^2 has standard deviation ``s``."""
    if not s > 0:
        raise GridError(f"s must be positive, got {s}")
    lo = (grid.t_start - t_center) / (math.sqrt(2) * s)
    hi = (grid.t_end - t_center) / (math.sqrt(2) * s)
    deficit = 1.0 - 0.5 * (math.erf(hi) - math.erf(lo))
    if deficit > TRUNCATION_TOL:
        raise GridError(f"grid truncates gaussian: norm deficit {deficit:.2e}")
    amp = np.exp(-((grid.times - t_center) ** 2) / (4 * s * s))
    return Wavepacket(grid, amp, label or f"gauss(s={s:g})")


def overlap(p: Wavepacket, q: Wavepacket) -> complex:
    """Inner product ``sum(conj(p) * q) * dt``."""
    _require_same_grid(p, q)
    return complex(np.vdot(p.amplitude, q.amplitude) * p.grid.dt)


def _offgrid_fraction(p: Wavepacket, tau: float) -> float:
    t = p.times + tau
    lo = p.grid.t_start - 0.5 * p.grid.dt
    hi = p.grid.t_end + 0.5 * p.grid.dt
    out = (t < lo) | (t > hi)
    return float(np.sum(p.intensity()[out]) * p.grid.dt)


def delayed(p: Wavepacket, tau: float, method: str = "linear") -> Wavepacket:
    """Packet ``phi(t - tau)`` resampled on the same grid.

    ``method="linear"`` interpolates linearly (exact when ``tau`` is a multiple
    of ``dt``); ``method="fft"`` applies the band-limited phase ramp.
    """
    if tau == 0:
        return p
    lost = _offgrid_fraction(p, tau)
    if lost > TRUNCATION_TOL:
        raise GridError(f"delay {tau} ns pushes {lost:.2e} of the norm off the grid")
    if method == "linear":
        t = p.times - tau
        tt = p.times
        amp = np.interp(t, tt, p.amplitude.real, left=0.0, right=0.0) + 1j * np.interp(
            t, tt, p.amplitude.imag, left=0.0, right=0.0
        )
    elif method == "fft":
        n = p.grid.n_samples
        w = 2 * np.pi * np.fft.fftfreq(n, p.grid.dt)
        amp = np.fft.ifft(np.fft.fft(p.amplitude) * np.exp(-1j * w * tau))
    else:
        raise ValueError(f"unknown interpolation method {method!r}")
    return Wavepacket(p.grid, amp, p.label)


def detuned(p: Wavepacket, delta_f: float) -> Wavepacket:
    """Multiply by ``exp(-i 2 pi delta_f t)``; ``delta_f`` in MHz."""
    if delta_f == 0:
        return p
    f_ghz = delta_f * 1e-3
    if abs(f_ghz) >= 0.5 / p.grid.dt:
        raise GridError(
            f"detuning {delta_f} MHz aliases on dt={p.grid.dt} ns "
            f"(Nyquist {0.5e3 / p.grid.dt:.1f} MHz)"
        )
    amp = p.amplitude * np.exp(-2j * np.pi * f_ghz * p.times)
    return Wavepacket(p.grid, amp, p.label)


def spectrum(p: Wavepacket) -> SpectralAmplitude:
    """Sampled continuous Fourier transform, ascending angular frequencies."""
    n, dt = p.grid.n_samples, p.grid.dt
    w = 2 * np.pi * np.fft.fftfreq(n, dt)
    amp = dt * np.exp(-1j * w * p.grid.t_start) * np.fft.fft(p.amplitude)
    return SpectralAmplitude(np.fft.fftshift(w), np.fft.fftshift(amp))


def spectral_overlap(s1: SpectralAmplitude, s2: SpectralAmplitude, tau: float = 0.0) -> complex:
    """Frequency-domain counterpart of ``overlap(delayed(p1, tau), p2)``."""
    if not s1.compatible_with(s2):
        raise GridError("spectra are sampled on different frequency axes")
    w = s1.frequencies
    integrand = np.conj(s1.amplitude) * s2.amplitude * np.exp(1j * w * tau)
    return complex(np.sum(integrand) * s1.dw / (2 * np.pi))


def compose_bins(packets: Sequence[Wavepacket], weights: Sequence[complex], label: str = "") -> Wavepacket:
    """Normalized superposition ``sum_i w_i phi_i`` (time-bin encoding)."""
    if len(packets) == 0 or len(packets) != len(weights):
        raise GridError("need one weight per packet")
    for q in packets[1:]:
        _require_same_grid(packets[0], q)
    amp = sum(complex(w) * q.amplitude for w, q in zip(weights, packets))
    if np.sum(np.abs(amp) ** 2) * packets[0].grid.dt < 1e-24:
        raise GridError("time-bin superposition has zero norm")
    return Wavepacket(packets[0].grid, amp, label or "+".join(q.label for q in packets))


def common_grid(sigmas: Sequence[float], centers: Sequence[float], dt: float = DEFAULT_DT,
                span: float = DEFAULT_SPAN_SIGMAS, pad: float = 0.0) -> TimeGrid:
    """Grid covering every ``center +/- span * sigma`` with extra ``pad`` ns each side."""
    lo = min(c - span * s for s, c in zip(sigmas, centers)) - pad
    hi = max(c + span * s for s, c in zip(sigmas, centers)) + pad
    return TimeGrid.spanning(lo, hi, dt)

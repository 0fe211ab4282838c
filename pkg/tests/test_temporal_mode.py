import math

import numpy as np
import pytest

from lmqc.errors import GridError
from lmqc.temporal_mode import (
    SpectralAmplitude,
    TimeGrid,
    Wavepacket,
    common_grid,
    compose_bins,
    delayed,
    detuned,
    make_gaussian,
    make_sech,
    overlap,
    sech_grid,
    spectral_overlap,
    spectrum,
)


def sech(sigma=10.0, center=0.0, pad=0.0):
    grid = common_grid([sigma], [center], pad=pad)
    return make_sech(sigma, center, grid)


@pytest.mark.parametrize("sigma", [5.0, 8.4, 17.9, 43.3])
def test_sech_is_unit_norm_with_expected_peak(sigma):
    p = sech(sigma)
    assert abs(p.norm() - 1) < 1e-12
    assert np.max(np.abs(p.amplitude)) == pytest.approx(1 / math.sqrt(4 * sigma), rel=1e-6)


def test_sech_rejects_truncating_grid():
    grid = TimeGrid.spanning(-120, 120, 0.1)  # +/-12 sigma for sigma = 10
    with pytest.raises(GridError, match="truncates"):
        make_sech(10.0, 0.0, grid)


def test_gaussian_norm_and_width():
    grid = TimeGrid.spanning(-100, 100, 0.05)
    g = make_gaussian(7.0, 0.0, grid)
    assert abs(g.norm() - 1) < 1e-12
    var = np.sum(g.times**2 * g.intensity()) * grid.dt
    assert math.sqrt(var) == pytest.approx(7.0, rel=1e-6)


@pytest.mark.parametrize("tau", [0.0, 4.2, 8.4, 30.0, -25.0])
def test_delayed_overlap_matches_closed_form(tau):
    p = sech(8.4, pad=abs(tau))
    x = tau / (2 * 8.4)
    expected = 1.0 if tau == 0 else x / math.sinh(x)
    assert abs(overlap(delayed(p, tau), p)) == pytest.approx(expected, abs=1e-6)


def test_fft_and_linear_delay_agree_on_grid_multiples():
    p = sech(10.0, pad=50)
    a = delayed(p, 20.0, "linear")
    b = delayed(p, 20.0, "fft")
    # the FFT wraps the ~1e-5 edge tail around; the bulk agrees far better
    assert np.max(np.abs(a.amplitude - b.amplitude)) < 1e-4
    bulk = slice(500, -500)
    assert np.max(np.abs(a.amplitude[bulk] - b.amplitude[bulk])) < 1e-8


def test_delay_off_grid_rejected():
    p = sech(10.0)
    with pytest.raises(GridError, match="off the grid"):
        delayed(p, 200.0)


def test_far_separated_packets_are_orthogonal():
    grid = common_grid([10.0, 10.0], [0.0, 400.0])
    a, b = make_sech(10.0, 0.0, grid), make_sech(10.0, 400.0, grid)
    assert abs(overlap(a, b)) < 1e-6


def test_overlap_requires_same_grid():
    with pytest.raises(GridError):
        overlap(sech(10.0), sech(11.0))


def test_detuning_reduces_overlap_and_rejects_aliasing():
    p = sech(16.0)
    q = detuned(p, 10.0)
    assert abs(q.norm() - 1) < 1e-12
    assert abs(overlap(p, q)) < 1
    with pytest.raises(GridError, match="aliases"):
        detuned(p, 6000.0)


def test_spectrum_parseval_and_overlap():
    p = sech(16.0, pad=40)
    q = detuned(delayed(p, 10.0), 3.0)
    s, t = spectrum(p), spectrum(q)
    assert abs(s.norm() - 1) < 1e-9
    assert spectral_overlap(s, t) == pytest.approx(overlap(p, q), abs=1e-9)


def test_spectral_amplitude_validation():
    with pytest.raises(GridError):
        SpectralAmplitude(np.array([0.0, 1.0, 3.0]), np.ones(3))


def test_compose_bins_normalizes():
    grid = common_grid([8.0, 8.0], [0.0, 150.0])
    b1, b2 = make_sech(8.0, 0.0, grid), make_sech(8.0, 150.0, grid)
    tb = compose_bins([b1, b2], [1 / math.sqrt(2), 1j / math.sqrt(2)])
    assert abs(tb.norm() - 1) < 1e-12
    assert abs(overlap(b1, tb)) ** 2 == pytest.approx(0.5, abs=1e-5)
    with pytest.raises(GridError):
        compose_bins([b1, b1], [1, -1])


def test_wavepacket_rejects_zero_and_mismatch():
    g = TimeGrid(0.0, 0.1, 10)
    with pytest.raises(GridError):
        Wavepacket(g, np.zeros(10))
    with pytest.raises(GridError):
        Wavepacket(g, np.ones(9))


def test_csv_round_trip(tmp_path):
    p = detuned(sech(5.0), 2.0)
    path = tmp_path / "packet.csv"
    p.to_csv(path)
    q = Wavepacket.from_csv(path)
    assert q.grid.same_as(p.grid)
    assert np.allclose(q.amplitude, p.amplitude, atol=1e-15)


def test_sech_grid_helper():
    g = sech_grid(8.0, 10.0)
    assert g.t_start == pytest.approx(10 - 120)
    assert g.t_end >= 10 + 120 - 1e-9

import math

import pytest

from lmqc.errors import ParameterError
from lmqc.pulse_qubit.pipeline import (
    ALPHA_DEFAULT,
    efficiency_from_alpha,
    hom_pipeline,
    pee_proxy,
    transit_survival,
    two_phonon_probabilities,
)
from lmqc.pulse_qubit.shaping import ChannelGeometry
from lmqc.scatter import Beamsplitter, coincidence_probability_time
from lmqc.temporal_mode import common_grid, make_sech

# Frozen from a reference run of the pipeline at eta = 0.61.
PEE_PLATEAU = 0.13891
PEE_DIP = 0.01283


def test_efficiency_from_alpha():
    eps = efficiency_from_alpha()
    assert eps == pytest.approx(math.sqrt(ALPHA_DEFAULT / transit_survival(ChannelGeometry())))
    assert eps == pytest.approx(0.7709, abs=1e-4)
    with pytest.raises(ParameterError):
        efficiency_from_alpha(5.0)


def test_pee_proxy():
    assert pee_proxy(0.5) == pytest.approx(0.1325)
    with pytest.raises(ParameterError):
        pee_proxy(1.5)


@pytest.mark.parametrize("tau", [0.0, 10.0, 40.0])
def test_ideal_detectors_reproduce_coincidence(tau):
    grid = common_grid([8.4, 8.4], [0.0, 0.0], pad=tau)
    a, b = make_sech(8.4, tau, grid), make_sech(8.4, 0.0, grid)
    res = two_phonon_probabilities(a, b, Beamsplitter(0.61))
    p11 = coincidence_probability_time(make_sech(8.4, 0.0, grid), b, tau, 0.61)
    assert res.p_ee == pytest.approx(p11, abs=1e-7)


def test_broadband_plateau_scales_with_alpha():
    res = hom_pipeline(8.4, 8.4, 200.0, kappa_max=math.inf)
    p11 = 1 - 2 * 0.61 + 2 * 0.61**2
    assert res.p_ee == pytest.approx(ALPHA_DEFAULT * p11, rel=1e-6)


def test_frozen_endpoints():
    assert hom_pipeline(8.4, 8.3, 200.0).p_ee == pytest.approx(PEE_PLATEAU, abs=1e-4)
    assert hom_pipeline(8.4, 8.3, 0.0).p_ee == pytest.approx(PEE_DIP, abs=1e-4)


def test_balanced_ideal_dip_vanishes():
    res = hom_pipeline(8.4, 8.4, 0.0, eta=0.5)
    assert res.p_ee < 1e-12


def test_validation():
    grid = common_grid([8.0], [0.0])
    a = make_sech(8.0, 0.0, grid)
    with pytest.raises(ParameterError):
        two_phonon_probabilities(a, a, Beamsplitter(0.5), efficiencies=(1.2, 1.0))


def test_symmetric_in_delay_for_symmetric_geometry():
    g = ChannelGeometry(0.25, 0.25, 1.3)
    assert hom_pipeline(8.4, 8.4, 12.0, geometry=g).p_ee == pytest.approx(
        hom_pipeline(8.4, 8.4, -12.0, geometry=g).p_ee, abs=5e-3
    )


def test_tracks_scaled_coincidence_after_one_fit():
    import numpy as np

    taus = np.linspace(-100, 100, 21)
    pee = np.array([hom_pipeline(8.4, 8.4, float(t)).p_ee for t in taus])
    grid = common_grid([8.4], [0.0], pad=100)
    phi = make_sech(8.4, 0.0, grid)
    p11 = np.array([coincidence_probability_time(phi, phi, float(t), 0.61) for t in taus])
    alpha = pee[-1] / p11[-1]
    assert np.max(np.abs(pee - alpha * p11)) < 0.01

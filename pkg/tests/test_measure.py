import math

import numpy as np
import pytest

from lmqc.errors import ParameterError
from lmqc.measure import (
    DEVICE_VISIBILITY,
    OUTCOMES,
    PAULI_LABELS,
    TwoQubitProbVector,
    VisibilityMatrix,
    apply_confusion,
    bell_fidelity,
    bell_state,
    clip_for_display,
    correct_readout,
    dip_visibility,
    fringe_fit,
    fringe_visibility,
    fwhm,
    min_eigenvalue,
    pauli_expectations,
    plateau_threshold,
    read_matrix_csv,
    sample_outcomes,
    simulate_pauli_measurements,
    state_fidelity,
    tomography_reconstruct,
    write_matrix_csv,
)


def test_prob_vector_validation():
    p = TwoQubitProbVector(0.1, 0.2, 0.3, 0.4)
    assert p.p_q1 == pytest.approx(0.7)
    assert p.p_q2 == pytest.approx(0.6)
    with pytest.raises(ParameterError):
        TwoQubitProbVector(0.5, 0.5, 0.5, 0.5)
    with pytest.raises(ParameterError):
        TwoQubitProbVector(-0.1, 0.5, 0.3, 0.3)


def test_device_matrix_layout():
    m = DEVICE_VISIBILITY.matrix
    assert np.allclose(m.sum(axis=0), 1.0, atol=1e-4)
    # prepared |ee> is read as |ee> with probability 0.9154
    assert m[3, 3] == pytest.approx(0.9154)
    assert m[0, 1] == pytest.approx(0.0381)
    assert DEVICE_VISIBILITY.condition_number < 2


def test_visibility_validation():
    with pytest.raises(ParameterError):
        VisibilityMatrix(np.ones((4, 4)))
    with pytest.raises(ParameterError):
        VisibilityMatrix(np.eye(3))


def test_confusion_round_trip():
    p = TwoQubitProbVector(0.45, 0.25, 0.2, 0.1)
    back = correct_readout(apply_confusion(p, DEVICE_VISIBILITY), DEVICE_VISIBILITY)
    assert np.allclose(back.as_array(), p.as_array(), atol=1e-12)


def test_ill_conditioned_rejected():
    m = np.full((4, 4), 0.25)
    m[:, 0] = [0.25 + 1e-9, 0.25 - 1e-9, 0.25, 0.25]
    with pytest.raises(ParameterError, match="ill-conditioned"):
        correct_readout([0.25] * 4, VisibilityMatrix(m))


def test_correction_may_go_negative_and_clip_flags_it():
    meas = apply_confusion([1.0, 0.0, 0.0, 0.0], DEVICE_VISIBILITY).as_array()
    meas = meas + np.array([0.0, -0.005, 0.0, 0.005])
    corr = correct_readout(meas, DEVICE_VISIBILITY)
    assert corr.p_ge < 0
    clipped, changed = clip_for_display(corr)
    assert changed and clipped.min() == 0.0


def test_sample_outcomes_seeded():
    p = TwoQubitProbVector(0.25, 0.25, 0.25, 0.25)
    a = sample_outcomes(p, 1000, np.random.default_rng(3))
    b = sample_outcomes(p, 1000, np.random.default_rng(3))
    assert a == b


def test_bell_target_properties():
    rho = bell_state()
    assert np.trace(rho).real == pytest.approx(1.0)
    assert rho[OUTCOMES.index("eg"), OUTCOMES.index("ge")] == pytest.approx(0.5j)
    assert bell_fidelity(rho) == pytest.approx(1.0)
    assert state_fidelity(rho) == pytest.approx(1.0)


def test_bell_fidelity_of_mixture():
    rho = 0.5 * bell_state() + 0.5 * np.eye(4) / 4
    assert state_fidelity(rho) == pytest.approx(0.625)
    assert bell_fidelity(rho) == pytest.approx(math.sqrt(0.625))


def test_tomography_inverts_exact_expectations():
    rho = 0.8 * bell_state() + 0.2 * np.diag([0.5, 0.2, 0.2, 0.1])
    back = tomography_reconstruct(pauli_expectations(rho))
    assert np.allclose(back, rho, atol=1e-12)
    assert len(PAULI_LABELS) == 16


def test_tomography_missing_and_psd_projection():
    with pytest.raises(ParameterError, match="missing"):
        tomography_reconstruct({"XX": 1.0})
    rng = np.random.default_rng(0)
    exps = simulate_pauli_measurements(np.diag([1.0, 0, 0, 0]).astype(complex), 50, rng)
    raw = tomography_reconstruct(exps)
    proj = tomography_reconstruct(exps, project_psd=True)
    assert min_eigenvalue(proj) >= -1e-12
    assert np.trace(raw).real == pytest.approx(1.0)


def test_fringe_fit_recovers_parameters():
    x = np.linspace(0, 2 * np.pi, 16, endpoint=False)
    y = 0.5 + 0.4 * np.cos(x - 0.3)
    a, b, phi0 = fringe_fit(x, y)
    assert (a, b, phi0) == pytest.approx((0.5, 0.4, 0.3))
    assert fringe_visibility(x, y) == pytest.approx(0.8)


def test_fringe_fit_guards():
    x = np.linspace(0, np.pi, 16)
    with pytest.raises(ParameterError, match="full period"):
        fringe_fit(x, np.cos(x))
    with pytest.raises(ParameterError, match="at least 8"):
        fringe_fit([0, 1, 2], [1, 2, 3])


def test_plateau_threshold_root():
    t = plateau_threshold(10.0)
    x = t / 20.0
    assert x / math.sinh(x) == pytest.approx(1e-3, rel=1e-9)


def test_dip_visibility_and_guard():
    tau = np.linspace(-300, 300, 61)
    y = 0.14 * (1 - 0.9 * np.exp(-(tau / 10) ** 2))
    assert dip_visibility(tau, y, 8.4) == pytest.approx(0.9, abs=1e-9)
    with pytest.raises(ParameterError, match="no plateau"):
        dip_visibility(np.linspace(-20, 20, 11), np.ones(11), 8.4)


def test_fwhm_of_lorentzian_dip():
    x = np.linspace(-50, 50, 2001)
    y = 1 - 0.8 / (1 + (x / 5) ** 2)
    assert fwhm(x, y, 1.0) == pytest.approx(10.0, abs=1e-3)


def test_matrix_csv_round_trip(tmp_path):
    m = bell_state()
    write_matrix_csv(tmp_path / "m.csv", m)
    assert np.array_equal(read_matrix_csv(tmp_path / "m.csv"), m)


@pytest.mark.parametrize("phase", [0.3, 1.7, -2.5])
def test_bell_fidelity_blind_to_coherence_phase(phase):
    rho = 0.9 * bell_state() + 0.1 * np.eye(4) / 4
    u = np.diag(np.exp(1j * phase * np.array([0, 1, 0, 1])))
    assert bell_fidelity(u @ rho @ u.conj().T) == pytest.approx(bell_fidelity(rho), abs=1e-12)


@pytest.mark.parametrize("offset,scale", [(0.0, 1.0), (1.1, 1.0), (0.4, 3.5)])
def test_fringe_visibility_invariances(offset, scale):
    x = np.linspace(0, 2 * np.pi, 12, endpoint=False)
    y = scale * (0.6 + 0.3 * np.cos(x - offset))
    assert fringe_visibility(x, y) == pytest.approx(0.5, abs=1e-12)

import logging

import numpy as np
import pytest
from pydantic import ValidationError

from shared.errors import InputError
from shared.fock import check_density_matrix, mean_photon_number, quadrature_operators
from shared.models import StateKind, StateSpec
from shared.states import (
    analytic_mean_photon,
    apply_loss,
    loss_kraus_operators,
    make_cat,
    make_fock,
    make_squeezed_vacuum,
    prepare_state,
)


def test_cat_state_is_even_and_pure():
    rho = make_cat(1.0, 10)
    check_density_matrix(rho)
    assert np.trace(rho @ rho).real == pytest.approx(1.0)
    assert np.allclose(rho[1::2, :], 0.0)
    assert mean_photon_number(rho) == pytest.approx(np.tanh(1.0), abs=1e-6)


def test_cat_truncation_warning(caplog):
    with caplog.at_level(logging.WARNING, logger="shared.states"):
        make_cat(3.0, 4)
    assert "loses" in caplog.text


def test_cat_needs_room():
    with pytest.raises(InputError):
        make_cat(1.0, 1)
    with pytest.raises(InputError):
        make_cat(0.0, 6)


def test_squeezed_vacuum_quadrature_variances():
    rho = make_squeezed_vacuum(0.75, 10)
    x_op, p_op = quadrature_operators(10)
    assert np.trace(rho @ x_op @ x_op).real == pytest.approx(0.375, abs=1e-6)
    assert np.trace(rho @ p_op @ p_op).real == pytest.approx(1 / 1.5, abs=1e-6)


def test_squeezed_vacuum_unit_ratio_is_vacuum():
    assert np.allclose(make_squeezed_vacuum(1.0, 4), make_fock(0, 4))
    with pytest.raises(InputError):
        make_squeezed_vacuum(1.5, 4)


def test_squeezed_vacuum_angle_rotates_state():
    rho = make_squeezed_vacuum(0.5, 10, angle=np.pi / 2)
    x_op, p_op = quadrature_operators(10)
    # squeezing moved from X to P
    assert np.trace(rho @ p_op @ p_op).real == pytest.approx(0.25, abs=1e-4)


def test_fock_state():
    rho = make_fock(2, 4)
    assert rho[2, 2] == 1.0
    assert np.count_nonzero(rho) == 1
    with pytest.raises(InputError):
        make_fock(5, 4)


def test_loss_matches_kraus_sum(random_state):
    rho = random_state(6)
    kraus = loss_kraus_operators(0.8, 5)
    expected = sum(k @ rho @ k.conj().T for k in kraus)
    assert np.allclose(apply_loss(rho, 0.8), expected)
    assert np.allclose(sum(k.conj().T @ k for k in kraus), np.eye(6))


def test_loss_scales_mean_photon_number(random_state):
    rho = random_state(8)
    lossy = apply_loss(rho, 0.95)
    check_density_matrix(lossy)
    assert mean_photon_number(lossy) == pytest.approx(0.95 * mean_photon_number(rho))


@pytest.mark.parametrize("tau1, tau2", [(0.9, 0.95), (0.5, 0.3), (1.0, 0.7)])
def test_loss_channels_compose(random_state, tau1, tau2):
    rho = random_state(9)
    assert np.allclose(apply_loss(apply_loss(rho, tau1), tau2), apply_loss(rho, tau1 * tau2), rtol=0, atol=1e-10)


def test_loss_on_single_photon():
    lossy = apply_loss(make_fock(1, 3), 0.9)
    assert np.allclose(np.diag(lossy).real, [0.1, 0.9, 0.0, 0.0])


def test_loss_identity_and_domain(random_state):
    rho = random_state(4)
    assert np.allclose(apply_loss(rho, 1.0), rho)
    with pytest.raises(InputError):
        apply_loss(rho, 0.0)
    with pytest.raises(InputError):
        apply_loss(rho, 1.2)


def test_analytic_mean_photon():
    assert analytic_mean_photon(StateSpec(kind="cat", truncation=10, alpha=1.0)) == pytest.approx(0.76159, abs=1e-5)
    assert analytic_mean_photon(StateSpec(kind="cat", truncation=15, alpha=2.0)) == pytest.approx(3.99732, abs=1e-5)
    squeezed = StateSpec(kind="squeezed_vacuum", truncation=10, variance_ratio=0.75)
    assert analytic_mean_photon(squeezed) == pytest.approx(0.02083, abs=1e-5)
    assert analytic_mean_photon(StateSpec(kind="fock", truncation=14, n=4)) == 4.0


def test_prepare_state():
    prepared = prepare_state(StateSpec(kind=StateKind.FOCK, truncation=6, n=3))
    assert prepared.leakage == 0.0
    assert prepared.lossy_mean_photon == pytest.approx(0.95 * 3)
    check_density_matrix(prepared.rho_lossy)


def test_state_spec_validation():
    with pytest.raises(ValidationError):
        StateSpec(kind="cat", truncation=10)
    with pytest.raises(ValidationError):
        StateSpec(kind="fock", truncation=3, n=4)
    with pytest.raises(ValidationError):
        StateSpec(kind="squeezed_vacuum", truncation=3, variance_ratio=0.0)

import math

import numpy as np
import pytest
from scipy.special import factorial

from compass_decoherence.errors import ConfigurationError, CutoffTooSmallError
from compass_decoherence.states import (
    CompassParams,
    ReservoirParams,
    build_fock_state,
    coherent_amplitudes,
    component_amplitudes,
    default_cutoff,
    normalization,
    overlap_F,
    unnormalized_fock_state,
)


@pytest.mark.parametrize("X0,a", [(0.0, 0.0), (3.0, 2.1213203), (1.5, 1.0606602)])
def test_component_amplitudes(X0, a):
    got = component_amplitudes(CompassParams(X0))
    assert np.allclose(got, [a, -a, 1j * a, -1j * a], atol=1e-7)


def test_invalid_params():
    with pytest.raises(ConfigurationError):
        CompassParams(-1.0)
    with pytest.raises(ConfigurationError):
        CompassParams(1.0, p=-1)
    with pytest.raises(ConfigurationError):
        CompassParams(1.0, q=1.5)
    with pytest.raises(ConfigurationError):
        CompassParams(0.0, p=0, q=2)
    with pytest.raises(ConfigurationError):
        ReservoirParams(-0.1)
    assert ReservoirParams(1.0).diffusion == 1.5


def test_vacuum_normalization():
    assert normalization(CompassParams(0.0)) == pytest.approx(16.0, rel=1e-14)


def fock_norm(params, cutoff):
    # independent: sum of dense matrix products on coherent vectors
    a = np.diag(np.sqrt(np.arange(1, cutoff)), 1)
    op = np.linalg.matrix_power(a, params.q) @ np.linalg.matrix_power(a.T, params.p)
    v = sum(coherent_amplitudes(alpha, cutoff) for alpha in component_amplitudes(params))
    return float(np.linalg.norm(op @ v) ** 2)


@pytest.mark.parametrize("params,cutoff,rtol", [
    (CompassParams(3.0), 80, 1e-10),
    (CompassParams(5.0), 120, 1e-10),
    (CompassParams(1.5, 14, 14), 160, 1e-8),
    (CompassParams(1.5, 20, 14), 160, 1e-8),
    (CompassParams(1.5, 20, 20), 160, 1e-8),
    (CompassParams(4.0, 3, 5), 140, 1e-8),
])
def test_normalization_matches_fock_norm(params, cutoff, rtol):
    assert normalization(params) == pytest.approx(fock_norm(params, cutoff), rel=rtol)


def test_vacuum_fock_state():
    v = build_fock_state(CompassParams(0.0), 20).amplitudes
    assert v[0] == pytest.approx(1.0)
    assert np.allclose(v[1:], 0)


def test_compass_support_mod_four():
    v = build_fock_state(CompassParams(3.0), 80).amplitudes
    n = np.arange(80)
    assert np.max(np.abs(v[n % 4 != 0])) < 1e-14
    assert np.sum(np.abs(v) ** 2) == pytest.approx(1.0, abs=1e-12)


def test_single_photon_addition_closed_form():
    # a^dag |alpha>: amplitude sqrt(n) <n-1|alpha> = e^{-|a|^2/2} alpha^(n-1) n / sqrt(n!)
    cutoff = 60
    n = np.arange(cutoff)
    expected = np.zeros(cutoff, dtype=complex)
    for alpha in component_amplitudes(CompassParams(1.5)):
        term = np.zeros(cutoff, dtype=complex)
        term[1:] = np.exp(-abs(alpha) ** 2 / 2) * alpha ** (n[1:] - 1) * n[1:] / np.sqrt(factorial(n[1:]))
        expected += term
    expected /= np.linalg.norm(expected)
    got = build_fock_state(CompassParams(1.5, 1, 0), cutoff).amplitudes
    assert np.allclose(got, expected, atol=1e-13)


@pytest.mark.parametrize("p", [2, 14, 20])
def test_equal_p_q_has_even_support(p):
    v = build_fock_state(CompassParams(1.5, p, p)).amplitudes
    assert np.max(np.abs(v[1::2])) <= 1e-12


def test_tail_guard():
    with pytest.raises(CutoffTooSmallError):
        build_fock_state(CompassParams(5.0), 25)
    params = CompassParams(3.0, 4, 2)
    v, tail = unnormalized_fock_state(params, default_cutoff(params))
    assert tail / np.sum(np.abs(v) ** 2) < 1e-10


@pytest.mark.parametrize("X0", [0.5, 3.0, 5.0])
def test_overlap_of_plain_compass_is_one(X0):
    assert overlap_F(CompassParams(X0)) == pytest.approx(1.0, abs=1e-12)


def test_overlap_cutoff_independent():
    params = CompassParams(1.5, 14, 14)
    f120, f160 = overlap_F(params, 120), overlap_F(params, 160)
    assert 0 < f120 < 1
    assert abs(f120 - f160) <= 1e-8


def test_overlap_increases_with_x0():
    values = [overlap_F(CompassParams(x, 14, 14)) for x in np.arange(2.0, 6.01, 0.5)]
    assert all(0 <= f <= 1 for f in values)
    assert np.all(np.diff(values) > 0)

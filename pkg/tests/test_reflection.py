import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from irsmimo.channel import ArrayGeometry, numerical_rank, steering_vector, ula_direction
from irsmimo.errors import InputDomainError
from irsmimo.reflection import (DistributedIrs, ReactanceElement, ReflectionPattern,
                                array_gain, dof_spectrum, effective_channel,
                                optimal_pattern, quantize, scattering_coefficient)
from irsmimo.rng import stream

from helpers import crandn

phase_arrays = st.integers(1, 32).flatmap(
    lambda n: arrays(float, n, elements=st.floats(-10, 10, allow_nan=False)))


def test_scattering_matched_reactance():
    s = scattering_coefficient(ReactanceElement(50.0, 50.0))
    assert s == pytest.approx(1j, abs=1e-15)
    assert np.angle(s) == pytest.approx(np.pi / 2)


@given(st.floats(-1e6, 1e6, allow_nan=False), st.floats(1e-3, 1e3))
def test_scattering_unit_modulus(x, z0):
    assert abs(scattering_coefficient(ReactanceElement(x, z0))) == pytest.approx(1.0, abs=1e-12)


@given(phase_arrays)
def test_pattern_phases_wrapped(ph):
    p = ReflectionPattern(ph)
    assert np.all((p.phases >= 0) & (p.phases < 2 * np.pi))
    np.testing.assert_allclose(p.vector, np.exp(1j * ph), atol=1e-9)


@pytest.mark.parametrize("n", [4, 16, 64])
def test_optimal_pattern_gain_is_n_squared(n):
    rng = stream(11, n)
    phi_i, phi_d = rng.uniform(0, 2 * np.pi, (2, n))
    g = array_gain(optimal_pattern(phi_i, phi_d), phi_i, phi_d)
    assert g == pytest.approx(n ** 2, rel=1e-9)


@given(phase_arrays, st.floats(-5, 5))
def test_array_gain_common_offset_invariant(ph, c):
    rng = np.random.default_rng(ph.size)
    phi_i, phi_d = rng.uniform(0, 2 * np.pi, (2, ph.size))
    assert array_gain(ph + c, phi_i, phi_d) == pytest.approx(array_gain(ph, phi_i, phi_d),
                                                              rel=1e-9, abs=1e-9)


def test_optimal_beats_random_search():
    rng = stream(12, 0)
    for n in (2, 8, 32):
        phi_i, phi_d = rng.uniform(0, 2 * np.pi, (2, n))
        best = max(array_gain(rng.uniform(0, 2 * np.pi, n), phi_i, phi_d) for _ in range(1000))
        assert array_gain(optimal_pattern(phi_i, phi_d), phi_i, phi_d) >= best


def test_array_gain_length_mismatch():
    with pytest.raises(InputDomainError):
        array_gain(np.zeros(3), np.zeros(3), np.zeros(4))


def test_quantize_examples():
    q = quantize(ReflectionPattern([0.1, np.pi / 2 + 0.1, 3.0, 2 * np.pi - 0.1]), 1)
    np.testing.assert_allclose(q.phases, [0, np.pi, np.pi, 0])
    q2 = quantize(ReflectionPattern([np.pi / 4, 3 * np.pi / 4]), 1)
    np.testing.assert_allclose(q2.phases, [0, np.pi])       # ties go to the smaller index
    assert quantize(ReflectionPattern([np.pi / 4]), 2).phases[0] == 0.0
    assert quantize(ReflectionPattern([0.4 * np.pi]), 1).phases[0] == 0.0
    assert quantize(ReflectionPattern([0.9 * np.pi]), 2).phases[0] == pytest.approx(np.pi)
    with pytest.raises(InputDomainError):
        quantize(ReflectionPattern([0.0]), 0)


@given(phase_arrays, st.integers(1, 6))
def test_quantize_nearest_grid_point(ph, bits):
    q = quantize(ReflectionPattern(ph), bits)
    step = 2 * np.pi / 2 ** bits
    err = np.angle(np.exp(1j * (q.phases - ReflectionPattern(ph).phases)))
    assert np.all(np.abs(err) <= step / 2 + 1e-9)
    assert q.resolution == bits


def test_quantize_16_bits_keeps_gain():
    rng = stream(13, 0)
    phi_i, phi_d = rng.uniform(0, 2 * np.pi, (2, 32))
    opt = optimal_pattern(phi_i, phi_d)
    g0 = array_gain(opt, phi_i, phi_d)
    assert abs(array_gain(quantize(opt, 16), phi_i, phi_d) - g0) < 1e-3 * g0


def test_effective_channel_matches_loop(rng):
    nt, n, k = 3, 5, 2
    links = [(crandn(rng, nt, n), crandn(rng, n, k)) for _ in range(2)]
    hd = crandn(rng, nt, k)
    pats = [ReflectionPattern(rng.uniform(0, 6, n)) for _ in range(2)]
    dense = hd + sum(g @ p.matrix @ h for (g, h), p in zip(links, pats))
    np.testing.assert_allclose(effective_channel(links, pats, hd), dense, atol=1e-12)
    np.testing.assert_allclose(effective_channel(links, DistributedIrs(tuple((None, p) for p in pats)), hd),
                               dense, atol=1e-12)


def test_vectorised_and_matrix_forms_agree(rng):
    # sum_i theta_i^H diag(h_ik^H) G_i^H  ==  sum_i h_ik^H Phi_i^H G_i^H, per user
    n, nt = 6, 4
    for _ in range(5):
        g, h = crandn(rng, nt, n), crandn(rng, n)
        theta = np.exp(1j * rng.uniform(0, 6, n))
        lhs = theta.conj() @ np.diag(h.conj()) @ g.conj().T
        rhs = h.conj() @ np.diag(theta).conj().T @ g.conj().T
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


@given(st.integers(0, 10_000))
def test_effective_channel_linear_in_phi(seed):
    rng = np.random.default_rng(seed)
    g, h = crandn(rng, 3, 4), crandn(rng, 4, 2)
    a, b = crandn(rng, 4), crandn(rng, 4)
    c1, c2 = crandn(rng, 2)
    lhs = effective_channel([(g, h)], [c1 * a + c2 * b])
    rhs = c1 * effective_channel([(g, h)], [a]) + c2 * effective_channel([(g, h)], [b])
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_effective_channel_dimension_errors(rng):
    with pytest.raises(InputDomainError):
        effective_channel([(crandn(rng, 3, 4), crandn(rng, 4, 2))], [ReflectionPattern.zeros(5)])
    with pytest.raises(InputDomainError):
        effective_channel([], [])


def test_distributed_irs_requires_common_size():
    with pytest.raises(InputDomainError):
        DistributedIrs(((None, ReflectionPattern.zeros(4)), (None, ReflectionPattern.zeros(5))))


@pytest.mark.parametrize("units", [1, 2, 3])
def test_rank_one_cascades_add_rank(units):
    rng = stream(14, units)
    lam = 0.1
    bs, irs = ArrayGeometry.ula(4, lam), ArrayGeometry.ula(8, lam)
    total = np.zeros((4, 4), dtype=complex)
    for az in np.linspace(-1.0, 1.0, units):
        g = np.outer(steering_vector(bs, ula_direction(az)), steering_vector(irs, ula_direction(-az / 2)).conj())
        total += g @ crandn(rng, 8, 4)
    spec = dof_spectrum(total)
    assert spec[0] == 1.0
    assert np.sum(spec > 1e-6) >= units
    assert numerical_rank(total) == units


def test_dof_spectrum_zero_matrix():
    with pytest.raises(InputDomainError):
        dof_spectrum(np.zeros((3, 3)))

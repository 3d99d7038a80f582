import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from nchardy import matcore

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 6)


def rng_of(seed):
    return np.random.default_rng(seed)


def test_abs_psd_examples():
    assert np.array_equal(matcore.abs_psd(np.zeros((2, 2))), np.zeros((2, 2)))
    assert np.allclose(matcore.abs_psd(np.eye(2)), np.eye(2), atol=1e-15)
    assert np.allclose(matcore.abs_psd([[0, 1], [0, 0]]), np.diag([0, 1]), atol=1e-15)


def test_psd_power_examples():
    assert np.allclose(matcore.psd_power(np.eye(3), 7), np.eye(3), atol=1e-14)
    assert np.allclose(matcore.psd_power(np.diag([4.0, 9.0]), 0.5), np.diag([2.0, 3.0]), atol=1e-14)
    a = matcore.random_psd(rng_of(1), 4)
    assert np.allclose(matcore.psd_power(a, 2), a @ a, atol=1e-10)


def test_psd_power_rejects_non_psd():
    with pytest.raises(matcore.NotPsdError):
        matcore.psd_power(np.diag([1.0, -1.0]), 0.5)
    with pytest.raises(matcore.NotHermitianError):
        matcore.psd_power(np.array([[1.0, 1.0], [0.0, 1.0]]), 0.5)
    with pytest.raises(ValueError):
        matcore.psd_power(np.eye(2), -1)


def test_schatten_examples():
    assert matcore.schatten_norm(np.eye(2), 2) == pytest.approx(np.sqrt(2))
    assert matcore.schatten_norm([[0, 1], [0, 0]], 1) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        matcore.schatten_norm(np.eye(2), 0.5)


@given(seeds, dims)
def test_schatten_inf_matches_power_iteration(seed, d):
    x = matcore.random_matrix(rng_of(seed), d)
    assert matcore.schatten_norm(x, np.inf) == pytest.approx(matcore.power_iteration_norm(x, 2000), rel=1e-6)


@given(seeds, dims, st.sampled_from([1.0, 1.5, 2.0, 3.0]))
def test_schatten_matches_scipy_svd(seed, d, p):
    x = matcore.random_matrix(rng_of(seed), d)
    s = sla.svdvals(x)
    assert matcore.schatten_norm(x, p) == pytest.approx(np.sum(s**p) ** (1 / p), rel=1e-12)


@given(seeds, dims)
def test_sqrt_matches_scipy(seed, d):
    a = matcore.random_psd(rng_of(seed), d)
    assert np.allclose(matcore.psd_sqrt(a), sla.sqrtm(a), atol=1e-9)


@given(seeds, dims, st.floats(0.1, 3.0))
def test_power_matches_scipy(seed, d, r):
    a = matcore.random_psd(rng_of(seed), d) + 0.1 * np.eye(d)
    assert np.allclose(matcore.psd_power(a, r), sla.fractional_matrix_power(a, r), atol=1e-8)


def test_loewner_examples():
    assert matcore.loewner_leq(np.diag([1.0, 2.0]), np.diag([2.0, 3.0]))
    b = matcore.random_psd(rng_of(0), 3)
    assert matcore.loewner_leq(b, b)
    assert not matcore.loewner_leq(np.diag([0.0, 2.0]), np.eye(2))
    assert matcore.loewner_slack(np.diag([0.0, 2.0]), np.eye(2)) == pytest.approx(-1.0)


def test_hansen_examples():
    a = matcore.random_psd(rng_of(2), 3)
    lhs, rhs = matcore.hansen_transform_bound(a, np.eye(3), 2)
    assert np.allclose(lhs, a) and np.allclose(rhs, a, atol=1e-10)
    lhs, rhs = matcore.hansen_transform_bound(a, np.zeros((3, 3)), 2)
    assert np.allclose(lhs, 0) and np.allclose(rhs, 0)
    with pytest.raises(ValueError):
        matcore.hansen_transform_bound(a, 2 * np.eye(3), 2)
    with pytest.raises(ValueError):
        matcore.hansen_transform_bound(a, np.eye(3), 0.5)


@settings(max_examples=200)
@given(seeds, st.integers(1, 4), st.floats(1.0, 5.0))
def test_hansen_inequality(seed, d, p):
    rng = rng_of(seed)
    a = matcore.random_psd(rng, d)
    b = matcore.random_contraction(rng, d)
    lhs, rhs = matcore.hansen_transform_bound(a, b, p)
    assert matcore.loewner_leq(lhs, rhs, tol=1e-9 * max(1.0, np.abs(rhs).max()))


def test_hansen_ill_conditioned():
    # b* a^p b has an eigenvalue near 1e-15 here; the exact slack is 9.3748e-4
    rng = rng_of(173)
    a = matcore.random_psd(rng, 3)
    b = matcore.random_contraction(rng, 3)
    lhs, rhs = matcore.hansen_transform_bound(a, b, 4.875)
    assert np.linalg.eigvalsh(rhs - lhs)[0] == pytest.approx(9.37481e-4, rel=1e-4)


@given(seeds, dims, st.integers(1, 32))
def test_operator_convexity(seed, d, m):
    rng = rng_of(seed)
    mu = rng.uniform(0, 1, m)
    fs = matcore.random_matrix(rng, d, (m,))
    s = np.einsum("k,kij->ij", mu, fs)
    rhs = mu.sum() * np.einsum("k,kji,kjl->il", mu, fs.conj(), fs)
    assert matcore.loewner_leq(matcore.sq(s), rhs, tol=1e-9 * max(1.0, np.abs(rhs).max()))


@given(seeds, dims, st.sampled_from([0.25, 1.0, 4.0]))
def test_parallelogram_type_bound(seed, d, t):
    rng = rng_of(seed)
    a, b = matcore.random_matrix(rng, d), matcore.random_matrix(rng, d)
    rhs = (1 + t) * matcore.sq(a) + (1 + 1 / t) * matcore.sq(b)
    assert matcore.loewner_leq(matcore.sq(a + b), rhs, tol=1e-10 * max(1.0, np.abs(rhs).max()))


@given(seeds, dims)
def test_abs_right_polar_invariance(seed, d):
    rng = rng_of(seed)
    x = matcore.random_matrix(rng, d)
    u = matcore.random_unitary(rng, d)
    assert np.allclose(matcore.abs_psd(u @ x), matcore.abs_psd(x), atol=1e-10)


def test_normalized_trace_switch():
    try:
        matcore.set_normalized_trace(True)
        assert matcore.trace(np.eye(4)) == pytest.approx(1.0)
        assert matcore.schatten_norm(np.eye(4), 1) == pytest.approx(1.0)
    finally:
        matcore.set_normalized_trace(False)
    assert matcore.trace(np.eye(4)) == pytest.approx(4.0)


def test_stacks_and_bad_input():
    a = matcore.random_psd(rng_of(3), 2, (5,))
    assert matcore.psd_sqrt(a).shape == (5, 2, 2)
    with pytest.raises(ValueError):
        matcore.as_matrix(np.ones((2, 3)))
    with pytest.raises(ValueError):
        matcore.as_matrix([[np.nan]])

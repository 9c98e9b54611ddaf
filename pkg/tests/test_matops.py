import numpy as np
import pytest

from aqec.matops import (
    AQECError,
    check_density,
    dagger,
    kron,
    maximally_mixed,
    partial_trace,
    polar,
    psd_sqrt,
    random_density,
    random_unitary,
    trace_norm,
)

X = np.array([[0, 1], [1, 0]], dtype=complex)


def test_kron_examples():
    assert np.allclose(kron(np.eye(2), np.eye(2)), np.eye(4))
    assert np.allclose(kron(np.diag([1, 2]), np.diag([3, 4])), np.diag([3, 4, 6, 8]))
    assert np.allclose(kron(np.array([[2.0]]), X), 2 * X)


def test_partial_trace_examples():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    b = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    assert np.allclose(partial_trace(np.kron(a, b), (2, 3), "second"), a * np.trace(b))
    assert np.allclose(partial_trace(np.kron(a, b), (2, 3), "first"), b * np.trace(a))
    phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert np.allclose(partial_trace(np.outer(phi, phi), (2, 2), "second"), np.eye(2) / 2)
    assert np.allclose(partial_trace(np.eye(6), (2, 3), "first"), 2 * np.eye(3))


def test_partial_trace_rejects_bad_dims():
    with pytest.raises(AQECError) as err:
        partial_trace(np.eye(5), (2, 3))
    assert err.value.code == "bad-tensor-dims"


def test_partial_trace_preserves_trace():
    rng = np.random.default_rng(1)
    for _ in range(20):
        m = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        assert abs(np.trace(partial_trace(m, (3, 2), "first")) - np.trace(m)) < 1e-10


def test_psd_sqrt_examples():
    assert np.allclose(psd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))
    assert np.allclose(psd_sqrt(np.eye(3)), np.eye(3))
    with pytest.raises(AQECError) as err:
        psd_sqrt(np.diag([1.0, -1.0]))
    assert err.value.code == "not-psd"


def test_psd_sqrt_clamps_rounding_noise():
    s = psd_sqrt(np.diag([1.0, -1e-12]))
    assert np.allclose(s, np.diag([1.0, 0.0]))


def test_psd_sqrt_squares_back():
    rng = np.random.default_rng(2)
    for _ in range(20):
        g = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
        h = g @ dagger(g)
        s = psd_sqrt(h)
        assert np.linalg.norm(s @ s - h) < 1e-8


def test_polar_examples():
    w, p = polar(np.diag([2.0, -3.0]))
    assert np.allclose(w, np.diag([1.0, -1.0]))
    assert np.allclose(p, np.diag([2.0, 3.0]))
    u = random_unitary(3, np.random.default_rng(3))
    w, p = polar(u)
    assert np.allclose(w, u) and np.allclose(p, np.eye(3))
    w, p = polar(np.zeros((2, 2)))
    assert np.allclose(w, np.eye(2)) and np.allclose(p, 0)


def test_polar_identity_on_kernel():
    w, p = polar(np.diag([2.0, 0.0]))
    assert np.allclose(w, np.eye(2))


def test_polar_random():
    rng = np.random.default_rng(4)
    for _ in range(20):
        x = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        w, p = polar(x)
        assert np.linalg.norm(w @ p - x) < 1e-8
        assert np.linalg.norm(dagger(w) @ w - np.eye(4)) < 1e-8


def test_trace_norm_examples():
    assert trace_norm(np.diag([1.0, -2.0])) == pytest.approx(3.0)
    assert trace_norm(random_unitary(4, np.random.default_rng(5))) == pytest.approx(4.0)
    a, b = np.array([1.0, 2.0, 2.0]), np.array([0.0, 3.0, 4.0j])
    assert trace_norm(np.outer(a, b.conj())) == pytest.approx(3.0 * 5.0)


def test_trace_norm_is_max_over_unitaries():
    rng = np.random.default_rng(6)
    x = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    tn = trace_norm(x)
    us = np.array([random_unitary(3, rng) for _ in range(10_000)])
    sampled = np.abs(np.einsum("ij,nji->n", x, us))
    assert sampled.max() <= tn + 1e-12
    w, _ = polar(x)
    assert abs(np.trace(x @ dagger(w)) - tn) < 1e-8


def test_check_density():
    rng = np.random.default_rng(7)
    check_density(random_density(3, rng))
    check_density(maximally_mixed(4))
    for bad in (np.diag([1.5, -0.5]), np.diag([0.5, 0.4]), np.array([[0.5, 0.1], [0.2, 0.5]])):
        with pytest.raises(AQECError) as err:
            check_density(bad)
        assert err.value.code == "not-density"

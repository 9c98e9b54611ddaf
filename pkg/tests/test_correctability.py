import numpy as np
import pytest

from aqec.channels import (
    PAULI_I,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    ChannelRep,
    CodeIsometry,
    amplitude_damping,
    apply,
    bit_flip_code,
    complementary,
    compose,
    encoding_channel,
    five_qubit_code,
    identity_channel,
    leung_code,
    random_channel,
    tensor_power,
)
from aqec.correctability import algebra_check, kl_channels, kl_check_exact, kl_residual
from aqec.matops import AQECError, random_density
from aqec.oracles import SeesawConfig, seesaw_optimal_recovery
from aqec.recovery import delta_estimate_id


def embed(op, site, n):
    out = np.eye(1)
    for k in range(n):
        out = np.kron(out, op if k == site else PAULI_I)
    return out


def single_x_noise(weights=(0.7, 0.1, 0.1, 0.1)):
    ks = [np.sqrt(weights[0]) * np.eye(8)] + [np.sqrt(w) * embed(PAULI_X, k, 3) for k, w in enumerate(weights[1:])]
    return ChannelRep(np.stack(ks))


def five_qubit_pauli_noise():
    ops = [np.eye(32)] + [embed(p, k, 5) for k in range(5) for p in (PAULI_X, PAULI_Y, PAULI_Z)]
    return ChannelRep(np.stack(ops) / np.sqrt(len(ops)))


def test_kl_exact_bit_flip():
    passes, lam = kl_check_exact(bit_flip_code(), single_x_noise())
    assert passes
    assert np.allclose(lam, np.diag([0.7, 0.1, 0.1, 0.1]))


def test_kl_exact_fails_on_phase_error():
    p = 0.2
    noise = ChannelRep(np.stack([np.sqrt(1 - p) * np.eye(8), np.sqrt(p) * embed(PAULI_Z, 0, 3)]))
    passes, _ = kl_check_exact(bit_flip_code(), noise)
    assert not passes


def test_kl_exact_five_qubit():
    passes, lam = kl_check_exact(five_qubit_code(), five_qubit_pauli_noise())
    assert passes
    assert np.allclose(lam, np.diag(np.diag(lam)), atol=1e-12)


def test_kl_dims_checked():
    with pytest.raises(AQECError) as err:
        kl_check_exact(bit_flip_code(), amplitude_damping(0.1))
    assert err.value.code == "bad-dims"


def test_kl_residual_exact_code():
    code, noise = bit_flip_code(), single_x_noise()
    rep = kl_residual(code, noise)
    assert rep.epsilon <= 1e-9 and rep.exact
    _, lam = kl_check_exact(code, noise)
    assert np.allclose(rep.lam, lam, atol=1e-9)


def test_kl_residual_leung_within_factor_two():
    code = leung_code()
    noise = tensor_power(amplitude_damping(0.1), 4)
    rep = kl_residual(code, noise)
    delta = delta_estimate_id(compose(noise, encoding_channel(code))).delta
    assert 0 < rep.epsilon <= 2 * delta + 1e-9
    assert not rep.exact


def test_kl_residual_lambda_is_a_state():
    rng = np.random.default_rng(0)
    code = leung_code()
    noise = random_channel(16, 16, 3, rng)
    sigma = random_density(16, rng)
    rep = kl_residual(code, noise, sigma)
    assert np.linalg.eigvalsh(rep.lam)[0] > -1e-9
    assert np.trace(rep.lam).real == pytest.approx(1.0, abs=1e-8)
    b = rep.b_ops
    assert np.max(np.abs(b - np.conj(np.transpose(b, (1, 0, 3, 2))))) < 1e-9


def test_kl_channels_reproduce_complementary_noise():
    rng = np.random.default_rng(1)
    code = leung_code()
    noise = tensor_power(amplitude_damping(0.2), 4)
    rep = kl_residual(code, noise)
    perturbed, base = kl_channels(code, noise, rep.lam)
    target = compose(complementary(noise), encoding_channel(code))
    for _ in range(5):
        rho = random_density(2, rng)
        assert np.max(np.abs(apply(perturbed, rho) - apply(target, rho))) < 1e-9
        # B adds Tr(rho B_ij) on top of the constant lambda^T output
        expect = rep.env_state + np.einsum("ijlm,ml->ji", rep.b_ops, rho)
        assert np.max(np.abs(apply(target, rho) - expect)) < 1e-9
        assert np.allclose(apply(base, rho), rep.env_state)


def test_kl_residual_physical_sigma_shape():
    with pytest.raises(AQECError):
        kl_residual(leung_code(), tensor_power(amplitude_damping(0.1), 4), np.eye(2) / 2)


def test_kl_residual_bounds_seesaw_optimum():
    code = bit_flip_code()
    noise = tensor_power(amplitude_damping(0.1), 3)
    eps = kl_residual(code, noise).epsilon
    rep = seesaw_optimal_recovery(compose(noise, encoding_channel(code)), identity_channel(2), SeesawConfig(restarts=1))
    assert eps >= np.sqrt(1 - rep.best_fidelity) - 1e-6


def test_report_to_dict():
    doc = kl_residual(bit_flip_code(), single_x_noise()).to_dict()
    assert set(doc) == {"lambda", "epsilon", "exact", "sigma"}
    assert doc["exact"] is True


def test_algebra_check_examples():
    code, noise = bit_flip_code(), single_x_noise()
    assert algebra_check(noise, code, [np.eye(2)])
    full = [PAULI_X, PAULI_Z]
    assert algebra_check(noise, code, full) == kl_check_exact(code, noise)[0]
    phase = ChannelRep(np.stack([np.sqrt(0.8) * np.eye(8), np.sqrt(0.2) * embed(PAULI_Z, 0, 3)]))
    assert algebra_check(phase, code, full) == kl_check_exact(code, phase)[0] is False
    # Z errors leave the diagonal (classical) algebra intact
    assert algebra_check(phase, code, [PAULI_Z])


def test_algebra_check_subsystem():
    # logical space A (x) B with noise acting only on B
    rng = np.random.default_rng(2)
    code = CodeIsometry(np.eye(4))
    noise_b = random_channel(2, 2, 3, rng)
    noise = ChannelRep(np.stack([np.kron(np.eye(2), k) for k in noise_b.kraus]))
    gens = [np.kron(p, np.eye(2)) for p in (PAULI_X, PAULI_Y, PAULI_Z)]
    assert algebra_check(noise, code, gens)
    assert not algebra_check(noise, code, [np.kron(np.eye(2), PAULI_X)])
    with pytest.raises(AQECError):
        algebra_check(noise, code, [PAULI_X])

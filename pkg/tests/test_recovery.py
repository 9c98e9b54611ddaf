from dataclasses import replace

import numpy as np
import pytest

from aqec.channels import (
    PAULI_I,
    PAULI_X,
    ChannelRep,
    amplitude_damping,
    apply,
    bit_flip_code,
    complementary,
    compose,
    constant_channel,
    dephasing_projection,
    encoding_channel,
    identity_channel,
    leung_code,
    phase_flip,
    random_channel,
    tensor_power,
)
from aqec.fidelity import bures_distance, bures_distance_at, entanglement_fidelity, worst_case_fidelity
from aqec.matops import AQECError, maximally_mixed, random_density, random_unitary
from aqec.recovery import (
    DualFidelity,
    RecoveryEstimate,
    build_fixed_state_recovery,
    build_recovery,
    delta_estimate,
    delta_estimate_id,
    find_saddle,
    fixed_state_bounds,
    sandwich,
    verify_guarantee,
)


def single_x_noise():
    ops = [np.sqrt(0.7) * np.eye(8)]
    for k in range(3):
        op = np.eye(1)
        for j in range(3):
            op = np.kron(op, PAULI_X if j == k else PAULI_I)
        ops.append(np.sqrt(0.1) * op)
    return ChannelRep(np.stack(ops))


@pytest.fixture(scope="module")
def exact_channel():
    return compose(single_x_noise(), encoding_channel(bit_flip_code()))


@pytest.fixture(scope="module")
def leung01():
    return compose(tensor_power(amplitude_damping(0.1), 4), encoding_channel(leung_code()))


@pytest.fixture(scope="module")
def leung01_estimate(leung01):
    return delta_estimate_id(leung01)


def test_estimate_exact_code(exact_channel):
    est = delta_estimate_id(exact_channel)
    assert est.delta <= 1e-6
    assert est.delta == pytest.approx(np.sqrt(1 - est.fidelity_dual), abs=1e-10)


def test_estimate_identity():
    assert delta_estimate_id(identity_channel(2)).delta == pytest.approx(0.0, abs=1e-7)


def test_estimate_leung_small_gamma(leung01_estimate):
    est = leung01_estimate
    assert 0 < est.lower_bound <= est.upper_bound < 1
    assert est.converged


def test_estimate_matches_general_route(leung01, leung01_estimate):
    sigma = leung01_estimate.sigma
    general = delta_estimate(leung01, identity_channel(2), constant_channel(sigma, 2))
    assert general.delta == pytest.approx(leung01_estimate.delta, abs=1e-6)


def test_dual_fidelity_matches_definition(leung01):
    rng = np.random.default_rng(0)
    f = DualFidelity(leung01)
    nhat = complementary(leung01)
    target = compose(nhat, constant_channel(f.sigma, 2))
    for _ in range(3):
        rho = random_density(2, rng)
        assert f(rho) == pytest.approx(entanglement_fidelity(nhat, target, rho), abs=1e-9)


def test_dual_fidelity_explicit_formula():
    rng = np.random.default_rng(1)
    n = random_channel(2, 3, 3, rng)
    sigma, rho = random_density(2, rng), random_density(2, rng)
    e = n.kraus
    c = np.einsum("jab,bc,iac->ij", e, sigma, e.conj())
    rho2 = rho @ rho
    w = sum(c[i, j] * e[i] @ rho2 @ e[j].conj().T for i in range(3) for j in range(3))
    ref = np.sum(np.sqrt(np.clip(np.linalg.eigvalsh(w), 0, None)))
    assert DualFidelity(n, sigma)(rho) == pytest.approx(ref, abs=1e-9)


def test_delta_estimate_dephasing_target():
    # classical information survives dephasing exactly
    noise = phase_flip(0.3)
    est = delta_estimate(noise, dephasing_projection(2), dephasing_projection(2))
    assert est.delta == pytest.approx(0.0, abs=1e-6)


def test_delta_estimate_requires_idempotent():
    noise = phase_flip(0.3)
    with pytest.raises(AQECError) as err:
        delta_estimate(noise, identity_channel(2), amplitude_damping(0.5))
    assert err.value.code == "not-idempotent"


def test_sandwich_examples():
    z = RecoveryEstimate(0.0, 1.0, None, maximally_mixed(2))
    assert sandwich(z) == (0.0, 0.0)
    assert sandwich(RecoveryEstimate(0.2, 0.96, None, maximally_mixed(2))) == pytest.approx((0.1, 0.2))


def test_kraus_representation_invariance():
    rng = np.random.default_rng(2)
    n = random_channel(2, 3, 3, rng)
    u = random_unitary(3, rng)
    mixed = ChannelRep(np.einsum("ij,jab->iab", u, n.kraus))
    assert delta_estimate_id(mixed).delta == pytest.approx(delta_estimate_id(n).delta, abs=1e-6)


def test_saddle_exact_code(exact_channel):
    saddle = find_saddle(exact_channel)
    assert saddle.achieved == pytest.approx(1.0, abs=1e-6)
    r = build_recovery(saddle)
    dist, ok = verify_guarantee(r, exact_channel, delta_estimate_id(exact_channel))
    assert ok and dist <= 1e-5


def test_saddle_leung(leung01, leung01_estimate):
    saddle = find_saddle(leung01, estimate=leung01_estimate)
    assert saddle.achieved == pytest.approx(leung01_estimate.fidelity_dual, abs=1e-6)
    assert np.linalg.norm(saddle.a0, 2) <= 1 + 1e-9
    assert saddle.certified <= saddle.achieved + 1e-9
    r = build_recovery(saddle, maximally_mixed(2))
    assert np.linalg.norm(r.gram() - np.eye(r.dim_in)) < 1e-8
    dist, ok = verify_guarantee(r, leung01, leung01_estimate)
    assert ok and dist <= leung01_estimate.delta + 1e-6
    # the certificate is a valid lower bound on the achieved fidelity
    assert 1 - dist**2 >= saddle.certified - 1e-6


def test_saddle_identity_noise():
    saddle = find_saddle(identity_channel(2))
    d = saddle.dim_logical
    # slices of a0^dag along B' (x) R_sigma are the recovery's Kraus operators;
    # sum |Tr T_k|^2 / d^2 = 1 iff every T_k is a multiple of the identity
    t = saddle.a0.conj().T.reshape(-1, d, d)
    assert np.sum(np.abs(np.einsum("kaa->k", t)) ** 2) / d**2 == pytest.approx(1.0, abs=1e-6)
    assert bures_distance(build_recovery(saddle), identity_channel(2)) <= 1e-5


def test_build_recovery_rejects_expansive_contraction(exact_channel):
    saddle = find_saddle(exact_channel)
    with pytest.raises(AQECError) as err:
        build_recovery(replace(saddle, a0=2 * saddle.a0))
    assert err.value.code == "bad-completion"


def test_completion_of_trace_preserving_part_is_inert(exact_channel):
    saddle = find_saddle(exact_channel)
    r1 = build_recovery(saddle, maximally_mixed(2))
    r2 = build_recovery(saddle, np.diag([1.0, 0.0]))
    rng = np.random.default_rng(3)
    rho = exact_channel(random_density(2, rng))
    assert np.linalg.norm(apply(r1, rho) - apply(r2, rho)) < 1e-9


def test_wrong_recovery_fails_guarantee(leung01, leung01_estimate):
    bogus = constant_channel(maximally_mixed(2), 16)
    dist, ok = verify_guarantee(bogus, leung01, leung01_estimate)
    assert not ok and dist > leung01_estimate.delta


def test_verify_guarantee_dims(leung01, leung01_estimate):
    with pytest.raises(AQECError):
        verify_guarantee(constant_channel(maximally_mixed(3), 16), leung01, leung01_estimate)


def test_fixed_state_bounds_examples(exact_channel, leung01):
    rng = np.random.default_rng(4)
    lo, hi = fixed_state_bounds(exact_channel, random_density(2, rng))
    assert hi == pytest.approx(0.0, abs=1e-6) and lo == pytest.approx(0.0, abs=1e-6)
    lo, hi = fixed_state_bounds(leung01, maximally_mixed(2))
    assert hi == pytest.approx(np.sqrt(1 - DualFidelity(leung01)(maximally_mixed(2))), abs=1e-6)
    lo, hi = fixed_state_bounds(leung01, np.diag([1.0, 0.0]))
    assert 0 <= lo <= hi


def test_fixed_state_bound_at_argmin(leung01, leung01_estimate):
    rho = leung01_estimate.argmin_state
    _, hi = fixed_state_bounds(leung01, rho)
    assert hi == pytest.approx(np.sqrt(1 - DualFidelity(leung01, rho)(rho)), abs=1e-6)


def test_fixed_state_recovery(exact_channel, leung01):
    rng = np.random.default_rng(5)
    rho = random_density(2, rng)
    r = build_fixed_state_recovery(exact_channel, rho)
    assert bures_distance_at(compose(r, exact_channel), identity_channel(2), rho) <= 1e-5
    rho = maximally_mixed(2)
    r = build_fixed_state_recovery(leung01, rho)
    _, hi = fixed_state_bounds(leung01, rho)
    assert bures_distance_at(compose(r, leung01), identity_channel(2), rho) <= hi + 1e-6


def test_fixed_state_recovery_pure_states():
    rng = np.random.default_rng(6)
    n = random_channel(2, 4, 3, rng)
    for _ in range(20):
        psi = rng.normal(size=2) + 1j * rng.normal(size=2)
        psi /= np.linalg.norm(psi)
        rho = np.outer(psi, psi.conj())
        r = build_fixed_state_recovery(n, rho)
        _, hi = fixed_state_bounds(n, rho)
        assert bures_distance_at(compose(r, n), identity_channel(2), rho) <= hi + 1e-6


def test_monotone_in_gamma():
    code = leung_code()
    deltas = [
        delta_estimate_id(compose(tensor_power(amplitude_damping(g), 4), encoding_channel(code))).delta
        for g in np.geomspace(0.01, 0.5, 6)
    ]
    assert np.all(np.diff(deltas) >= -1e-6)


def test_guarantee_on_random_channels():
    rng = np.random.default_rng(7)
    for _ in range(5):
        n = random_channel(2, 4, 3, rng)
        est = delta_estimate_id(n)
        r = build_recovery(find_saddle(n, estimate=est))
        dist, ok = verify_guarantee(r, n, est)
        assert ok, (dist, est.delta)
        assert 1 - worst_case_fidelity(compose(r, n), identity_channel(2)).value <= est.delta**2 + 2e-6

"""
Exact and approximate Knill-Laflamme conditions
================================================

The three-qubit repetition code corrects any single bit flip exactly. The
four-qubit code under amplitude damping does not, but only barely: the
residual of the perturbed conditions, the complementary-channel estimate and
the recovery built from it all scale like gamma.
"""
import numpy as np

from aqec.channels import (
    PAULI_I,
    PAULI_X,
    ChannelRep,
    amplitude_damping,
    bit_flip_code,
    compose,
    encoding_channel,
    identity_channel,
    leung_code,
    tensor_power,
)
from aqec.correctability import kl_check_exact, kl_residual
from aqec.fidelity import bures_distance
from aqec.recovery import build_recovery, delta_estimate_id, find_saddle, sandwich


def x_on(site, n=3):
    op = np.eye(1)
    for k in range(n):
        op = np.kron(op, PAULI_X if k == site else PAULI_I)
    return op


# no error with probability 0.7, otherwise one of three single flips
flips = ChannelRep(np.stack([np.sqrt(0.7) * np.eye(8)] + [np.sqrt(0.1) * x_on(k) for k in range(3)]))
passes, lam = kl_check_exact(bit_flip_code(), flips)
print("repetition code, single flips: exact =", passes)
print("lambda diagonal:", np.round(np.diag(lam).real, 3))

# the same code against amplitude damping on every qubit is not exact
damped = tensor_power(amplitude_damping(0.1), 3)
print("repetition code, damping: exact =", kl_check_exact(bit_flip_code(), damped)[0])

code = leung_code()
print("\n   gamma    epsilon      delta   recovered   bracket")
for gamma in (0.01, 0.03, 0.1):
    noise = tensor_power(amplitude_damping(gamma), 4)
    n = compose(noise, encoding_channel(code))
    eps = kl_residual(code, noise).epsilon
    est = delta_estimate_id(n)
    r = build_recovery(find_saddle(n, estimate=est))
    got = bures_distance(compose(r, n), identity_channel(2))
    lo, hi = sandwich(est)
    print(f"{gamma:8.2f} {eps:10.5f} {est.delta:10.5f} {got:11.5f}   [{lo:.5f}, {hi:.5f}]")

"""Knill-Laflamme tests: exact, perturbed, and the algebra (commutant) form."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ChannelRep, CodeIsometry, complementary, compose, constant_channel, encoding_channel
from .fidelity import MinimizerConfig, bures_distance
from .matops import TOL_PSD, AQECError, as_matrix, dagger, hermitian_part, maximally_mixed

__all__ = ["KLReport", "kl_check_exact", "kl_residual", "kl_channels", "algebra_check", "EXACT_TOL"]

EXACT_TOL = 1e-9
_ZERO_B = 1e-12


@dataclass(frozen=True, eq=False)
class KLReport:
    """Outcome of the perturbed Knill-Laflamme analysis.

    ``lam[i, j] = Tr(sigma E_i^dag E_j)`` and ``b_ops[i, j]`` is the logical
    operator ``V^dag E_i^dag E_j V - lam[i, j] I``. The environment state that
    the complementary channel would output is ``lam.T``.
    """

    lam: np.ndarray
    b_ops: np.ndarray
    epsilon: float
    sigma: np.ndarray

    @property
    def exact(self) -> bool:
        return self.epsilon <= EXACT_TOL

    @property
    def env_state(self) -> np.ndarray:
        return self.lam.T

    def to_dict(self) -> dict:
        def enc(m):
            return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]

        return {
            "lambda": enc(self.lam),
            "epsilon": float(self.epsilon),
            "exact": bool(self.exact),
            "sigma": enc(self.sigma),
        }


def _check_dims(code: CodeIsometry, noise: ChannelRep):
    if noise.dim_in != code.dim_physical:
        raise AQECError("bad-dims", f"noise acts on {noise.dim_in} dims, code is {code.dim_physical}-dimensional")


def _logical_products(code: CodeIsometry, noise: ChannelRep) -> np.ndarray:
    """``Q[i, j] = V^dag E_i^dag E_j V``."""
    ev = np.einsum("kab,bl->kal", noise.kraus, code.v)
    return np.einsum("ial,jam->ijlm", ev.conj(), ev)


def kl_check_exact(code: CodeIsometry, noise: ChannelRep, tol: float = EXACT_TOL) -> tuple[bool, np.ndarray]:
    """Test ``P E_i^dag E_j P = lam_ij P`` and return ``(passes, lam)``.

    ``lam_ij = Tr(P E_i^dag E_j P) / Tr(P)``; the test is on the largest
    Frobenius residual. Working with ``V^dag E_i^dag E_j V`` is equivalent
    because ``V`` is an isometry.
    """
    _check_dims(code, noise)
    q = _logical_products(code, noise)
    d = code.dim_logical
    lam = np.einsum("ijll->ij", q) / d
    resid = q - lam[:, :, None, None] * np.eye(d)
    worst = float(np.max(np.linalg.norm(resid, axis=(2, 3))))
    return worst <= tol, lam


def kl_channels(code: CodeIsometry, noise: ChannelRep, lam) -> tuple[ChannelRep, ChannelRep]:
    """The pair ``(Lambda + B, Lambda)`` as channels from the logical space to the environment.

    ``Lambda + B`` is the complementary noise after encoding; ``Lambda`` is the
    constant channel onto ``lam.T``.
    """
    perturbed = compose(complementary(noise), encoding_channel(code))
    return perturbed, constant_channel(as_matrix(lam).T, code.dim_logical)


def kl_residual(
    code: CodeIsometry,
    noise: ChannelRep,
    sigma=None,
    cfg: MinimizerConfig | None = None,
) -> KLReport:
    """Perturbed KL decomposition with the guess ``lam_ij = Tr(sigma E_i^dag E_j)``.

    ``sigma`` lives on the physical space and defaults to the encoded
    maximally mixed state. ``epsilon`` is the worst-case distance between
    ``Lambda + B`` and ``Lambda``.
    """
    _check_dims(code, noise)
    if sigma is None:
        sigma = code.encode_state(maximally_mixed(code.dim_logical))
    sigma = as_matrix(sigma)
    if sigma.shape != (code.dim_physical,) * 2:
        raise AQECError("bad-dims", f"sigma must act on the physical space ({code.dim_physical})")
    # lam[i, j] = Tr(sigma E_i^dag E_j)
    lam = np.einsum("iba,jbc,ca->ij", noise.kraus.conj(), noise.kraus, sigma)
    lam_h = hermitian_part(lam)
    if np.max(np.abs(lam - dagger(lam))) > 1e-9 or np.linalg.eigvalsh(lam_h)[0] < -TOL_PSD:
        raise AQECError("bad-lambda", "coefficient matrix is not positive semidefinite")
    q = _logical_products(code, noise)
    b_ops = q - lam[:, :, None, None] * np.eye(code.dim_logical)
    if np.max(np.abs(b_ops), initial=0.0) <= _ZERO_B:
        epsilon = 0.0
    else:
        perturbed, base = kl_channels(code, noise, lam_h)
        epsilon = bures_distance(perturbed, base, cfg)
    return KLReport(lam_h, b_ops, epsilon, sigma)


def algebra_check(noise: ChannelRep, code: CodeIsometry, generators, tol: float = EXACT_TOL) -> bool:
    """Exact correctability of an operator algebra: ``[A, V^dag E_i^dag E_j V] = 0`` for all generators."""
    _check_dims(code, noise)
    q = _logical_products(code, noise)
    worst = 0.0
    for a in generators:
        a = as_matrix(a)
        if a.shape != (code.dim_logical,) * 2:
            raise AQECError("bad-dims", f"generator of shape {a.shape} on a {code.dim_logical}-dim logical space")
        comm = np.einsum("lm,ijmn->ijln", a, q) - np.einsum("ijlm,mn->ijln", q, a)
        worst = max(worst, float(np.max(np.linalg.norm(comm, axis=(2, 3)))))
    return worst <= tol

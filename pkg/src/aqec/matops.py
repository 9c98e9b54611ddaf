"""Dense complex-matrix primitives shared by the rest of the package.

Everything here works on plain ``numpy`` arrays with ``complex128`` entries.
Tolerances are module-level constants so that callers agree on what
"Hermitian", "positive" and "equal" mean.
"""

from __future__ import annotations

import numpy as np

TOL_HERM = 1e-10
TOL_PSD = 1e-9
TOL_EQ = 1e-8


class AQECError(ValueError):
    """Error carrying a short machine-readable ``code`` (e.g. ``"bad-dims"``)."""

    def __init__(self, code: str, message: str = ""):
        self.code = code
        super().__init__(f"{code}: {message}" if message else code)


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2:
        raise AQECError("bad-dims", f"expected a matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise AQECError("not-finite", "matrix has NaN or Inf entries")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + dagger(a))


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def partial_trace(m, dims: tuple[int, int], which: str = "second") -> np.ndarray:
    """Trace out one factor of a bipartite operator.

    Args:
        m: square matrix on a space of size ``dims[0] * dims[1]``.
        dims: sizes of the (first, second) tensor factors.
        which: ``"first"`` or ``"second"``, the factor to discard.
    """
    m = as_matrix(m)
    da, db = int(dims[0]), int(dims[1])
    if m.shape != (da * db, da * db):
        raise AQECError("bad-tensor-dims", f"shape {m.shape} does not match dims {dims}")
    t = m.reshape(da, db, da, db)
    if which == "second":
        return np.einsum("ajbj->ab", t)
    if which == "first":
        return np.einsum("iaib->ab", t)
    raise ValueError(f"which must be 'first' or 'second', not {which!r}")


def is_hermitian(m, tol: float = TOL_HERM) -> bool:
    m = np.asarray(m)
    return m.shape[0] == m.shape[1] and float(np.max(np.abs(m - dagger(m)), initial=0.0)) <= tol


def psd_eigh(h, tol: float = TOL_PSD) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a PSD matrix, clamping eigenvalues in ``[-tol, 0)``."""
    h = as_matrix(h)
    w, v = np.linalg.eigh(hermitian_part(h))
    if w.size and w[0] < -tol:
        raise AQECError("not-psd", f"smallest eigenvalue {w[0]:.3e} below -{tol:g}")
    return np.clip(w, 0.0, None), v


def psd_sqrt(h, tol: float = TOL_PSD) -> np.ndarray:
    w, v = psd_eigh(h, tol)
    return (v * np.sqrt(w)) @ dagger(v)


def polar(x) -> tuple[np.ndarray, np.ndarray]:
    """Polar decomposition ``x = w @ p`` with ``p = sqrt(x^dag x)``.

    For square ``x`` the factor ``w`` is unitary. On ``ker(p)`` it is chosen as
    close to the identity as the unitarity constraint allows, so that e.g.
    ``polar(0)`` returns the identity. For wide or tall ``x`` the thin SVD factor
    is returned, which is a (co-)isometry.
    """
    x = as_matrix(x)
    m, n = x.shape
    u, s, vh = np.linalg.svd(x)
    if m != n:
        k = min(m, n)
        w = u[:, :k] @ vh[:k, :]
        return w, (dagger(vh[:k, :]) * s) @ vh[:k, :]
    p = (dagger(vh) * s) @ vh
    cut = TOL_EQ * max(1.0, s[0] if s.size else 0.0)
    r = int(np.sum(s > cut))
    w = u[:, :r] @ vh[:r, :]
    if r < n:
        # map ker(p) onto range(x)^perp by the unitary closest to the identity
        ker = dagger(vh[r:, :])
        coker = u[:, r:]
        a, _, bh = np.linalg.svd(dagger(coker) @ ker)
        w = w + coker @ a @ bh @ dagger(ker)
    return w, p


def trace_norm(x) -> float:
    return float(np.sum(np.linalg.svd(as_matrix(x), compute_uv=False)))


def is_density(m, tol: float = TOL_HERM) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    if not is_hermitian(m, tol) or abs(np.trace(m) - 1.0) > tol:
        return False
    return bool(np.linalg.eigvalsh(hermitian_part(m))[0] >= -tol)


def check_density(m, name: str = "rho") -> np.ndarray:
    """Validate and return ``m`` as a Hermitianized density matrix."""
    m = as_matrix(m)
    if not is_density(m):
        raise AQECError("not-density", f"{name} is not a density matrix")
    return hermitian_part(m)


def maximally_mixed(d: int) -> np.ndarray:
    return np.eye(d, dtype=np.complex128) / d


def ket(index: int, d: int) -> np.ndarray:
    v = np.zeros(d, dtype=np.complex128)
    v[index] = 1.0
    return v


def projector(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128).ravel()
    return np.outer(v, v.conj())


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density matrix ``G G^dag / Tr`` with a complex Gaussian ``d x rank`` factor."""
    k = d if rank is None else rank
    g = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
    r = g @ dagger(g)
    return r / np.trace(r).real


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_isometry(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))

"""Quantum channels in Kraus form, code isometries and complementary channels.

A :class:`ChannelRep` stores its Kraus operators as one array of shape
``(k, dim_out, dim_in)``. Channels are immutable; every operation returns a
new one. The environment basis of :func:`complementary` is the Kraus index
basis, in the order the operators are stored.

Choi matrices use the convention ``J = sum_jk |j><k| (x) N(|j><k|)``: the
input (ancilla) factor comes first and the channel output second.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .matops import (
    TOL_EQ,
    AQECError,
    as_matrix,
    dagger,
    hermitian_part,
    partial_trace,
    psd_eigh,
    psd_sqrt,
    random_isometry,
)

__all__ = [
    "ChannelRep",
    "CodeIsometry",
    "PurifiedState",
    "apply",
    "compose",
    "complementary",
    "constant_channel",
    "identity_channel",
    "trace_channel",
    "unitary_channel",
    "from_isometry",
    "encoding_channel",
    "decoding_channel",
    "canonicalize",
    "choi",
    "kraus_from_choi",
    "amplitude_damping",
    "bit_flip",
    "phase_flip",
    "depolarizing",
    "dephasing_projection",
    "tensor_power",
    "bit_flip_code",
    "five_qubit_code",
    "leung_code",
    "random_channel",
    "channel_to_json",
    "channel_from_json",
    "state_to_json",
    "state_from_json",
    "code_to_json",
    "code_from_json",
]

PAULI_I = np.eye(2, dtype=np.complex128)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)


@dataclass(frozen=True, eq=False)
class ChannelRep:
    """Completely positive map given by Kraus operators.

    ``trace_preserving=False`` marks a trace-decreasing map (sum of
    ``E^dag E`` below the identity), as produced mid-way through recovery
    construction.
    """

    kraus: np.ndarray
    trace_preserving: bool = True

    def __post_init__(self):
        k = np.asarray(self.kraus, dtype=np.complex128)
        if k.ndim == 2:
            k = k[None]
        if k.ndim != 3 or k.shape[0] == 0:
            raise AQECError("bad-dims", f"Kraus array must be (k, out, in), got {k.shape}")
        if not np.all(np.isfinite(k)):
            raise AQECError("not-finite", "Kraus operators contain NaN or Inf")
        k = k.copy()
        k.setflags(write=False)
        object.__setattr__(self, "kraus", k)
        defect = np.eye(self.dim_in) - self.gram()
        if self.trace_preserving:
            if np.linalg.norm(defect) > TOL_EQ:
                raise AQECError("not-trace-preserving", f"|I - sum E^dag E| = {np.linalg.norm(defect):.2e}")
        elif np.linalg.eigvalsh(hermitian_part(defect))[0] < -TOL_EQ:
            raise AQECError("not-trace-decreasing", "sum E^dag E exceeds the identity")

    @property
    def dim_in(self) -> int:
        return self.kraus.shape[2]

    @property
    def dim_out(self) -> int:
        return self.kraus.shape[1]

    @property
    def num_kraus(self) -> int:
        return self.kraus.shape[0]

    def gram(self) -> np.ndarray:
        """``sum_i E_i^dag E_i``."""
        return np.einsum("kai,kaj->ij", self.kraus.conj(), self.kraus)

    def __call__(self, rho) -> np.ndarray:
        return apply(self, rho)

    def __repr__(self):
        tp = "" if self.trace_preserving else ", trace-decreasing"
        return f"ChannelRep({self.dim_in}->{self.dim_out}, {self.num_kraus} Kraus{tp})"


@dataclass(frozen=True, eq=False)
class CodeIsometry:
    """Encoding isometry ``V`` (physical x logical) and its code projector."""

    v: np.ndarray

    def __post_init__(self):
        v = as_matrix(self.v).copy()
        if v.shape[0] < v.shape[1]:
            raise AQECError("bad-dims", f"isometry must be tall, got {v.shape}")
        if np.linalg.norm(dagger(v) @ v - np.eye(v.shape[1])) > TOL_EQ:
            raise AQECError("not-isometry", "V^dag V != I")
        v.setflags(write=False)
        object.__setattr__(self, "v", v)

    @property
    def dim_logical(self) -> int:
        return self.v.shape[1]

    @property
    def dim_physical(self) -> int:
        return self.v.shape[0]

    @property
    def projector(self) -> np.ndarray:
        return self.v @ dagger(self.v)

    def encode_state(self, rho) -> np.ndarray:
        return self.v @ as_matrix(rho) @ dagger(self.v)


@dataclass(frozen=True, eq=False)
class PurifiedState:
    """Density matrix together with a purification on ``S (x) R``, ``R`` a copy of ``S``.

    The canonical purification is ``sum_k sqrt(p_k) |e_k>|e_k>`` built from
    the eigendecomposition ``rho = sum_k p_k |e_k><e_k|``.
    """

    base: np.ndarray
    vector: np.ndarray

    @classmethod
    def canonical(cls, rho) -> "PurifiedState":
        p, e = psd_eigh(rho)
        d = e.shape[0]
        vec = np.einsum("k,ak,bk->ab", np.sqrt(p), e, e).reshape(d * d)
        return cls(hermitian_part(as_matrix(rho)), vec)

    @property
    def dim(self) -> int:
        return self.base.shape[0]

    def projector(self) -> np.ndarray:
        return np.outer(self.vector, self.vector.conj())


def _as_rho(c: ChannelRep, rho) -> np.ndarray:
    rho = as_matrix(rho)
    if rho.shape != (c.dim_in, c.dim_in):
        raise AQECError("bad-dims", f"state of shape {rho.shape} for channel with dim_in={c.dim_in}")
    return rho


def apply(c: ChannelRep, rho) -> np.ndarray:
    """``sum_i E_i rho E_i^dag``."""
    rho = _as_rho(c, rho)
    return np.einsum("kab,bc,kdc->ad", c.kraus, rho, c.kraus.conj())


def compose(outer: ChannelRep, inner: ChannelRep) -> ChannelRep:
    """Channel ``outer o inner`` with Kraus family ``{F_j E_i}`` (``j`` major)."""
    if inner.dim_out != outer.dim_in:
        raise AQECError("bad-dims", f"cannot compose {outer!r} after {inner!r}")
    k = np.einsum("jab,ibc->jiac", outer.kraus, inner.kraus)
    k = k.reshape(-1, outer.dim_out, inner.dim_in)
    return ChannelRep(k, outer.trace_preserving and inner.trace_preserving)


def complementary(c: ChannelRep) -> ChannelRep:
    """Complementary channel with environment basis = Kraus index.

    Output entry ``(i, j)`` is ``Tr(E_i rho E_j^dag)``. Its Kraus operators are
    indexed by the output row ``a`` of ``c``: ``(K_a)_{i,m} = (E_i)_{a,m}``.
    """
    return ChannelRep(np.transpose(c.kraus, (1, 0, 2)), c.trace_preserving)


def identity_channel(d: int) -> ChannelRep:
    return ChannelRep(np.eye(d, dtype=np.complex128)[None])


def unitary_channel(u) -> ChannelRep:
    return ChannelRep(as_matrix(u)[None])


def trace_channel(d: int) -> ChannelRep:
    """``rho -> Tr(rho)`` onto a one-dimensional output."""
    return ChannelRep(np.eye(d, dtype=np.complex128).reshape(d, 1, d))


def constant_channel(sigma, dim_in: int) -> ChannelRep:
    """``rho -> sigma Tr(rho)`` with Kraus operators ``sqrt(l_k) |e_k><m|``."""
    lam, e = psd_eigh(sigma)
    keep = lam > 0
    if not np.any(keep):
        raise AQECError("not-density", "constant output must be nonzero")
    lam, e = lam[keep], e[:, keep]
    kraus = np.einsum("k,ak,mn->kman", np.sqrt(lam), e, np.eye(dim_in))
    return ChannelRep(kraus.reshape(-1, e.shape[0], dim_in))


def from_isometry(v, env_dim: int) -> tuple[ChannelRep, ChannelRep]:
    """Channel and complementary channel of a Stinespring isometry.

    ``v`` maps the input onto ``B (x) E`` with ``E`` the second factor of
    dimension ``env_dim``. Returns ``(Tr_E V.V^dag, Tr_B V.V^dag)``.
    """
    v = as_matrix(v)
    rows, din = v.shape
    if env_dim <= 0 or rows % env_dim:
        raise AQECError("bad-tensor-dims", f"{rows} rows do not factor with env_dim={env_dim}")
    db = rows // env_dim
    t = v.reshape(db, env_dim, din)
    n = ChannelRep(np.transpose(t, (1, 0, 2)))
    nhat = ChannelRep(t)
    return n, nhat


def encoding_channel(code: CodeIsometry) -> ChannelRep:
    return ChannelRep(code.v[None])


def decoding_channel(code: CodeIsometry, tau=None) -> ChannelRep:
    """Naive decoder ``X -> V^dag X V + Tr((1-P) X) tau`` (no error correction)."""
    d, n = code.dim_logical, code.dim_physical
    tau = np.eye(d) / d if tau is None else as_matrix(tau)
    lam, t = psd_eigh(tau)
    # orthonormal basis of the code complement
    u, s, _ = np.linalg.svd(code.v, full_matrices=True)
    perp = u[:, d:]
    extra = [
        np.sqrt(l) * np.outer(t[:, k], perp[:, m].conj())
        for k, l in enumerate(lam)
        if l > 0
        for m in range(n - d)
    ]
    kraus = [dagger(code.v)] + extra
    return ChannelRep(np.stack(kraus))


def canonicalize(c: ChannelRep, cutoff: float = 1e-12) -> ChannelRep:
    """Minimal equivalent Kraus family (rank of the Choi matrix), zero elements dropped."""
    flat = c.kraus.reshape(c.num_kraus, -1).T
    u, s, _ = np.linalg.svd(flat, full_matrices=False)
    keep = s > cutoff * max(1.0, s[0])
    if not np.any(keep):
        keep[0] = True
    k = (u[:, keep] * s[keep]).T.reshape(-1, c.dim_out, c.dim_in)
    return ChannelRep(k, c.trace_preserving)


def choi(c: ChannelRep) -> np.ndarray:
    """Choi matrix ``(id (x) c)(|Omega><Omega|)``, ``|Omega> = sum_k |k>|k>``; input factor first."""
    # vec of each Kraus: |Omega_E> = sum_k |k> (x) E|k>, entries [k, a] = E[a, k]
    vecs = np.transpose(c.kraus, (0, 2, 1)).reshape(c.num_kraus, -1)
    return vecs.T @ vecs.conj()


def kraus_from_choi(
    m, dims: tuple[int, int], trace_preserving: bool = True, cutoff: float = 1e-12
) -> ChannelRep:
    """Inverse of :func:`choi`; ``dims = (dim_in, dim_out)``."""
    din, dout = int(dims[0]), int(dims[1])
    m = as_matrix(m)
    if m.shape != (din * dout, din * dout):
        raise AQECError("bad-tensor-dims", f"Choi shape {m.shape} vs dims {dims}")
    lam, vec = psd_eigh(m)
    if trace_preserving and np.linalg.norm(partial_trace(m, (din, dout), "second") - np.eye(din)) > TOL_EQ:
        raise AQECError("not-trace-preserving", "partial trace of the Choi matrix is not the identity")
    keep = lam > cutoff
    if not np.any(keep):
        raise AQECError("not-psd", "Choi matrix is zero")
    k = (vec[:, keep] * np.sqrt(lam[keep])).T.reshape(-1, din, dout)
    return ChannelRep(np.transpose(k, (0, 2, 1)), trace_preserving)


def _check_prob(p: float, name: str) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise AQECError("bad-param", f"{name}={p} outside [0, 1]")
    return p


def amplitude_damping(gamma: float) -> ChannelRep:
    g = _check_prob(gamma, "gamma")
    e0 = np.array([[1, 0], [0, np.sqrt(1 - g)]], dtype=np.complex128)
    e1 = np.array([[0, np.sqrt(g)], [0, 0]], dtype=np.complex128)
    return ChannelRep(np.stack([e0, e1]))


def bit_flip(p: float) -> ChannelRep:
    p = _check_prob(p, "p")
    return ChannelRep(np.stack([np.sqrt(1 - p) * PAULI_I, np.sqrt(p) * PAULI_X]))


def phase_flip(p: float) -> ChannelRep:
    p = _check_prob(p, "p")
    return ChannelRep(np.stack([np.sqrt(1 - p) * PAULI_I, np.sqrt(p) * PAULI_Z]))


def depolarizing(p: float) -> ChannelRep:
    """``rho -> (1 - p) rho + p/3 (X rho X + Y rho Y + Z rho Z)``; ``p = 3/4`` is fully depolarizing."""
    p = _check_prob(p, "p")
    w = [np.sqrt(1 - p)] + [np.sqrt(p / 3)] * 3
    return ChannelRep(np.stack([a * s for a, s in zip(w, (PAULI_I, PAULI_X, PAULI_Y, PAULI_Z))]))


def dephasing_projection(d: int) -> ChannelRep:
    """Projection onto the diagonal algebra, ``rho -> sum_k |k><k| rho |k><k|``."""
    return ChannelRep(np.stack([np.diag(np.eye(d)[k]).astype(np.complex128) for k in range(d)]))


def tensor_power(c: ChannelRep, n: int) -> ChannelRep:
    """``c^{(x) n}``; Kraus operators are all n-fold products, first factor major."""
    if n < 1:
        raise AQECError("bad-param", "tensor power must be >= 1")
    ks = [reduce(np.kron, combo) for combo in itertools.product(c.kraus, repeat=n)]
    return ChannelRep(np.stack(ks), c.trace_preserving)


def _basis_state(bits: str) -> np.ndarray:
    v = np.zeros(2 ** len(bits), dtype=np.complex128)
    v[int(bits, 2)] = 1.0
    return v


def bit_flip_code() -> CodeIsometry:
    return CodeIsometry(np.stack([_basis_state("000"), _basis_state("111")], axis=1))


def leung_code() -> CodeIsometry:
    """Four-qubit amplitude-damping code of Leung, Nielsen, Chuang and Yamamoto."""
    zero = (_basis_state("0000") + _basis_state("1111")) / np.sqrt(2)
    one = (_basis_state("0011") + _basis_state("1100")) / np.sqrt(2)
    return CodeIsometry(np.stack([zero, one], axis=1))


def _pauli_string(s: str) -> np.ndarray:
    table = {"I": PAULI_I, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}
    return reduce(np.kron, [table[ch] for ch in s])


def five_qubit_code() -> CodeIsometry:
    """[[5,1,3]] code with stabilizers XZZXI and cyclic shifts, logical X = XXXXX."""
    gens = ["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"]
    proj = np.eye(32, dtype=np.complex128)
    for g in gens:
        proj = proj @ (np.eye(32) + _pauli_string(g)) / 2
    zero = proj @ _basis_state("00000")
    zero /= np.linalg.norm(zero)
    one = _pauli_string("XXXXX") @ zero
    return CodeIsometry(np.stack([zero, one], axis=1))


def random_channel(dim_in: int, dim_out: int, num_kraus: int, rng: np.random.Generator) -> ChannelRep:
    """Channel from a Haar-like random Stinespring isometry."""
    v = random_isometry(num_kraus * dim_out, dim_in, rng)
    return ChannelRep(v.reshape(num_kraus, dim_out, dim_in))


def _matrix_to_json(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _matrix_from_json(rows) -> np.ndarray:
    arr = np.asarray(rows, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise AQECError("parse", "matrix entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def channel_to_json(c: ChannelRep) -> str:
    doc = {
        "dim_in": c.dim_in,
        "dim_out": c.dim_out,
        "kraus": [_matrix_to_json(k) for k in c.kraus],
    }
    if not c.trace_preserving:
        doc["trace_preserving"] = False
    return json.dumps(doc)


def channel_from_json(text: str) -> ChannelRep:
    try:
        doc = json.loads(text)
        kraus = np.stack([_matrix_from_json(k) for k in doc["kraus"]])
        din, dout = int(doc["dim_in"]), int(doc["dim_out"])
    except AQECError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise AQECError("parse", str(exc)) from exc
    if kraus.shape[1:] != (dout, din):
        raise AQECError("bad-dims", f"Kraus shape {kraus.shape[1:]} vs declared ({dout}, {din})")
    return ChannelRep(kraus, bool(doc.get("trace_preserving", True)))


def code_to_json(code: CodeIsometry) -> str:
    return channel_to_json(encoding_channel(code))


def code_from_json(text: str) -> CodeIsometry:
    c = channel_from_json(text)
    if c.num_kraus != 1:
        raise AQECError("parse", "a code file must hold exactly one Kraus operator (the isometry)")
    return CodeIsometry(c.kraus[0])


def state_to_json(rho) -> str:
    return json.dumps(_matrix_to_json(as_matrix(rho)))


def state_from_json(text: str) -> np.ndarray:
    try:
        return _matrix_from_json(json.loads(text))
    except (ValueError, TypeError) as exc:
        raise AQECError("parse", str(exc)) from exc


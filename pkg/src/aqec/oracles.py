"""Brute-force and iterative reference computations used to certify the main modules.

None of these are needed to compute estimates or recoveries; tests and the
``theorem1`` CLI use them as independent checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .channels import (
    ChannelRep,
    PurifiedState,
    choi,
    complementary,
    compose,
    kraus_from_choi,
    random_channel,
)
from .fidelity import (
    MinimizerConfig,
    OverlapFidelity,
    entanglement_fidelity,
    fd_gradient,
    worst_case_fidelity,
)
from .matops import dagger, hermitian_part, partial_trace

__all__ = [
    "SeesawConfig",
    "SeesawReport",
    "sampled_worst_case_fidelity",
    "random_states",
    "seesaw_optimal_recovery",
    "seesaw_fixed_state",
    "theorem1_gap",
    "gradient_check",
    "project_choi",
]


@dataclass(frozen=True)
class SeesawConfig:
    rounds: int = 200
    restarts: int = 8
    inner_steps: int = 25
    seed: int = 0
    tol: float = 1e-7
    softmin: float = 1e-5
    minimizer: MinimizerConfig = MinimizerConfig(random_starts=4)


@dataclass(frozen=True, eq=False)
class SeesawReport:
    best_fidelity: float
    iterations: int
    restarts: int
    converged: bool
    best_recovery: ChannelRep
    history: tuple = ()


def random_states(d: int, count: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(count, d, d)) + 1j * rng.normal(size=(count, d, d))
    r = g @ dagger(g)
    return r / np.trace(r, axis1=1, axis2=2).real[:, None, None]


def sampled_worst_case_fidelity(n: ChannelRep, m: ChannelRep, samples: int = 10_000, seed: int = 0) -> float:
    """Minimum entanglement fidelity over basis states and ``samples`` random density matrices."""
    f = OverlapFidelity(n, m)
    d = n.dim_in
    basis = np.zeros((d, d, d), dtype=np.complex128)
    basis[np.arange(d), np.arange(d), np.arange(d)] = 1.0
    best = float(np.min(f.batch(basis)))
    rng = np.random.default_rng(seed)
    left = samples
    while left > 0:
        k = min(left, 20_000)
        best = min(best, float(np.min(f.batch(random_states(d, k, rng)))))
        left -= k
    return best


def _renormalize(j: np.ndarray, dims: tuple[int, int], floor: float) -> np.ndarray:
    din, dout = dims
    p = partial_trace(j, dims, "second")
    pw, pv = np.linalg.eigh(hermitian_part(p))
    pw = np.clip(pw, floor, None)
    s = np.kron((pv / np.sqrt(pw)) @ dagger(pv), np.eye(dout))
    return hermitian_part(s @ j @ dagger(s))


def _clip_psd(j: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(j)
    return (v * np.clip(w, 0.0, None)) @ v.conj().T


def project_choi(j: np.ndarray, dims: tuple[int, int], alternations: int = 50, floor: float = 1e-12) -> np.ndarray:
    """Map a Hermitian matrix to a valid trace-preserving Choi matrix.

    Dykstra alternation between the PSD cone (eigenvalue clipping) and the
    affine set ``Tr_out J = 1`` approximates the Euclidean projection; a
    final ``(P^-1/2 (x) 1) J (P^-1/2 (x) 1)`` renormalization of the input
    marginal ``P`` makes the result exactly trace preserving.
    """
    din, dout = dims
    x = np.asarray(j, dtype=np.complex128)
    x = 0.5 * (x + x.conj().T)
    corr_psd = np.zeros_like(x)
    corr_aff = np.zeros_like(x)
    eye = np.eye(din)
    for _ in range(alternations):
        y = _clip_psd(x + corr_psd)
        corr_psd += x - y
        z = y + corr_aff
        defect = np.einsum("iaja->ij", z.reshape(din, dout, din, dout)) - eye
        x_new = (z.reshape(din, dout, din, dout) - defect[:, None, :, None] * (np.eye(dout) / dout)[None, :, None, :]).reshape(z.shape)
        corr_aff = z - x_new
        moved = np.max(np.abs(x_new - x))
        x = x_new
        if moved < 1e-11:
            break
    return _renormalize(_clip_psd(0.5 * (x + x.conj().T)), dims, floor)


_GRAD_FLOOR = 1e-10


class _FidelityTerm:
    """``J -> F_rho(R_J o n, m)`` and its gradient in the Choi matrix ``J`` of ``R``."""

    def __init__(self, n: ChannelRep, m: ChannelRep, rho):
        psi = PurifiedState.canonical(rho)
        d = psi.dim
        mat = psi.vector.reshape(d, d)
        a = np.einsum("kas,sr->kar", n.kraus, mat)
        # tau[i, r, i', r'] = ((n (x) id) psi)
        self.tau = np.einsum("kar,kbs->arbs", a, a.conj())
        b = np.einsum("kas,sr->kar", m.kraus, mat).reshape(m.num_kraus, -1).T
        self.b = b
        self.dims = (n.dim_out, m.dim_out)
        self.d = d

    def _s1(self, j):
        din, dout = self.dims
        j4 = j.reshape(din, dout, din, dout)
        return np.einsum("irjs,iojp->orps", self.tau, j4).reshape(dout * self.d, dout * self.d)

    def value_grad(self, j, with_grad=True):
        s1 = self._s1(j)
        q = dagger(self.b) @ s1 @ self.b
        w, v = np.linalg.eigh(hermitian_part(q))
        w = np.clip(w, 0.0, None)
        val = float(np.sum(np.sqrt(w)))
        if not with_grad:
            return val, None
        # floored rather than dropped: zero modes carry the steepest ascent off a face
        inv = 1.0 / np.sqrt(np.maximum(w, _GRAD_FLOOR))
        gs = 0.5 * self.b @ (v * inv) @ dagger(v) @ dagger(self.b)
        din, dout = self.dims
        g4 = gs.reshape(dout, self.d, dout, self.d)
        # d val = Tr(gs d s1) = Tr(Z dJ) with Z[i' o', i o] = sum tau[i r i' r'] gs[o' r' o r]
        z = np.einsum("irjs,psor->jpio", self.tau, g4).reshape(din * dout, din * dout)
        return val, hermitian_part(dagger(z))


def _softmin(vals: np.ndarray, temp: float) -> tuple[float, np.ndarray]:
    lo = float(np.min(vals))
    e = np.exp(-(vals - lo) / temp)
    return lo - temp * float(np.log(np.sum(e))), e / np.sum(e)


def _ascend(terms: list[_FidelityTerm], j: np.ndarray, dims, steps: int, temp: float, step0: float):
    """Projected gradient ascent on the soft minimum of the fidelity terms.

    With several terms the soft minimum is annealed from a broad temperature
    down to ``temp`` so that ascent does not stall at kinks of the hard minimum.
    """
    temps = [temp] if len(terms) == 1 else list(np.geomspace(1e-2, temp, 4)) if temp < 1e-2 else [temp]
    step = step0
    for t in temps:
        j, step = _ascend_at(terms, j, dims, steps, t, step)
    return j, step


def _ascend_at(terms, j, dims, steps, temp, step0):
    def objective(jj, grad=True):
        vg = [t.value_grad(jj, grad) for t in terms]
        vals = np.array([x[0] for x in vg])
        sm, w = _softmin(vals, temp)
        g = sum(wi * x[1] for wi, x in zip(w, vg)) if grad else None
        return sm, g

    val, grad = objective(j)
    step = step0
    for _ in range(steps):
        accepted = False
        while step > 1e-12:
            cand = project_choi(j + step * grad, dims)
            cval, _ = objective(cand, grad=False)
            if cval > val:
                j, accepted = cand, True
                step *= 2.0
                break
            step *= 0.5
        if not accepted:
            step = 1e-3
            break
        val, grad = objective(j)
    return j, step


def seesaw_optimal_recovery(n: ChannelRep, m: ChannelRep, cfg: SeesawConfig | None = None) -> SeesawReport:
    """Approximate ``max_R min_rho F_rho(R o n, m)`` by alternating ascent.

    Each round (a) finds the worst input of the current recovery with the
    multi-start state minimizer and adds it to a working set, and (b) runs
    projected gradient ascent of the recovery's Choi matrix on the soft
    minimum of the fidelities over that set. The reported fidelity is always
    a re-evaluated worst case of an explicit channel, so it never exceeds
    the true optimum.

    The objective is concave in the Choi matrix, so a run whose working-set
    value meets its re-evaluated worst case is final and later restarts are
    skipped. ``history`` holds the incumbent after every round.
    """
    cfg = cfg or SeesawConfig()
    dims = (n.dim_out, m.dim_out)
    rng = np.random.default_rng(cfg.seed)
    d = n.dim_in
    best_f, best_r, total, conv_any, history = -1.0, None, 0, False, []
    for restart in range(max(1, cfg.restarts)):
        if restart == 0:
            j = project_choi(np.eye(dims[0] * dims[1]) / dims[1], dims)
        else:
            j = choi(random_channel(dims[0], dims[1], dims[0] * dims[1], rng))
        states = [np.eye(d, dtype=np.complex128) / d]
        terms = [_FidelityTerm(n, m, states[0])]
        step = 1.0
        run_best = -1.0
        stall = 0
        for _ in range(cfg.rounds):
            total += 1
            j, step = _ascend(terms, j, dims, cfg.inner_steps, cfg.softmin, max(step, 1e-3))
            r = kraus_from_choi(j, dims)
            wc = worst_case_fidelity(compose(r, n), m, cfg.minimizer)
            upper = min(t.value_grad(j, False)[0] for t in terms)
            if wc.value > best_f:
                best_f, best_r = wc.value, r
            history.append(best_f)
            if wc.value > run_best + cfg.tol:
                run_best, stall = wc.value, 0
            else:
                stall += 1
            if upper - wc.value <= cfg.tol or stall >= 5:
                conv_any = conv_any or upper - wc.value <= 10 * cfg.tol
                break
            rho = wc.argmin_state
            if all(np.linalg.norm(rho - s) > 1e-6 for s in states):
                states.append(rho)
                terms.append(_FidelityTerm(n, m, rho))
        if conv_any:
            break
    return SeesawReport(float(best_f), total, restart + 1, conv_any, best_r, tuple(history))


def seesaw_fixed_state(n: ChannelRep, m: ChannelRep, rho, cfg: SeesawConfig | None = None) -> SeesawReport:
    """Approximate ``max_R F_rho(R o n, m)`` for a single fixed input ``rho``."""
    cfg = cfg or SeesawConfig()
    dims = (n.dim_out, m.dim_out)
    rng = np.random.default_rng(cfg.seed)
    term = [_FidelityTerm(n, m, rho)]
    best_f, best_r, total = -1.0, None, 0
    for restart in range(max(1, cfg.restarts)):
        if restart == 0:
            j = project_choi(np.eye(dims[0] * dims[1]) / dims[1], dims)
        else:
            j = choi(random_channel(dims[0], dims[1], dims[0] * dims[1], rng))
        j, _ = _ascend(term, j, dims, cfg.rounds * cfg.inner_steps, cfg.softmin, 1.0)
        total += 1
        r = kraus_from_choi(j, dims)
        f = entanglement_fidelity(compose(r, n), m, rho)
        if f > best_f:
            best_f, best_r = f, r
    return SeesawReport(float(best_f), total, cfg.restarts, True, best_r)


def theorem1_gap(n: ChannelRep, m: ChannelRep, m_complement: ChannelRep, cfg: SeesawConfig | None = None) -> float:
    """``|max_R F(R n, m) - max_R' F(n^, R' m^)|`` with both sides from the see-saw.

    The right side uses ``F(n^, R' m^) = F(R' m^, n^)``.
    """
    left = seesaw_optimal_recovery(n, m, cfg).best_fidelity
    right = seesaw_optimal_recovery(m_complement, complementary(n), cfg).best_fidelity
    return abs(left - right)


def gradient_check(objective: Callable[[np.ndarray], float], point: np.ndarray, step: float = 1e-6) -> float:
    """Largest relative deviation of the optimizer's gradient from a half-step reference."""
    point = np.asarray(point, dtype=np.float64)
    g = fd_gradient(objective, point, step)
    ref = fd_gradient(objective, point, step / 2)
    scale = max(float(np.max(np.abs(ref))), 1e-12)
    if float(np.max(np.abs(ref))) < 1e-10 and float(np.max(np.abs(g))) < 1e-10:
        return 0.0
    return float(np.max(np.abs(g - ref)) / scale)

"""Command-line front end and the amplitude-damping sweep.

Subcommands: ``check``, ``estimate``, ``recover``, ``scan-gamma``, ``theorem1``.
Exit codes: 0 success, 2 unreadable input, 3 bad dimensions or ranges,
4 a recovery that misses its guarantee.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass
from pathlib import Path

import numpy as np

from .channels import (
    ChannelRep,
    bit_flip_code,
    channel_from_json,
    channel_to_json,
    code_from_json,
    compose,
    decoding_channel,
    encoding_channel,
    five_qubit_code,
    identity_channel,
    leung_code,
    amplitude_damping,
    random_channel,
    state_from_json,
    tensor_power,
    trace_channel,
)
from .correctability import kl_check_exact, kl_residual
from .fidelity import MinimizerConfig, bures_distance
from .matops import AQECError, check_density
from .oracles import SeesawConfig, theorem1_gap
from .recovery import GUARANTEE_SLACK, build_recovery, delta_estimate_id, find_saddle, verify_guarantee

__all__ = ["SweepRow", "scan_gamma", "sweep_csv", "gamma_grid", "theorem1_table", "main", "CODES"]

EXIT_OK, EXIT_PARSE, EXIT_DIMS, EXIT_GUARANTEE = 0, 2, 3, 4
CSV_HEADER = "gamma,d_uncorrected,delta,d_near_optimal,epsilon_kl,seconds"

CODES = {"leung": leung_code, "bit-flip": bit_flip_code, "five-qubit": five_qubit_code}

_EXIT_BY_CODE = {"parse": EXIT_PARSE, "guarantee-violated": EXIT_GUARANTEE}


@dataclass(frozen=True)
class SweepRow:
    gamma: float
    d_uncorrected: float
    delta: float
    d_near_optimal: float
    epsilon_kl: float
    seconds: float

    def csv(self) -> str:
        return ",".join(f"{v:.12g}" for v in astuple(self))


def gamma_grid(gamma_min: float, gamma_max: float, steps: int) -> np.ndarray:
    """Log-spaced grid; a zero lower end falls back to linear spacing."""
    if not 0.0 <= gamma_min < gamma_max <= 1.0:
        raise AQECError("bad-range", f"need 0 <= gamma-min < gamma-max <= 1, got {gamma_min}, {gamma_max}")
    if steps < 1:
        raise AQECError("bad-range", "steps must be positive")
    if steps == 1:
        return np.array([gamma_min if gamma_min > 0 else gamma_max])
    if gamma_min == 0.0:
        return np.linspace(gamma_min, gamma_max, steps)
    return np.geomspace(gamma_min, gamma_max, steps)


def _physical_qubits(code) -> int:
    return int(round(np.log2(code.dim_physical)))


def _sweep_point(args) -> SweepRow:
    gamma, code_name, cfg = args
    start = time.perf_counter()
    code = CODES[code_name]()
    noise = tensor_power(amplitude_damping(gamma), _physical_qubits(code))
    n = compose(noise, encoding_channel(code))
    ident = identity_channel(code.dim_logical)
    d_unc = bures_distance(compose(decoding_channel(code), n), ident, cfg)
    est = delta_estimate_id(n, cfg=cfg)
    r = build_recovery(find_saddle(n, cfg=cfg, estimate=est))
    d_near, _ = verify_guarantee(r, n, est, cfg)
    eps = kl_residual(code, noise, cfg=cfg).epsilon
    row = SweepRow(float(gamma), d_unc, est.delta, d_near, eps, time.perf_counter() - start)
    if row.d_near_optimal > row.delta + GUARANTEE_SLACK:
        raise AQECError("guarantee-violated", f"gamma={gamma}: {row.d_near_optimal:.3e} > delta {row.delta:.3e}")
    return row


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("AQEC_THREADS", "1")))
    except ValueError:
        return 1


def scan_gamma(
    gammas,
    code: str = "leung",
    cfg: MinimizerConfig | None = None,
    workers: int | None = None,
) -> list[SweepRow]:
    """Uncorrected distance, ``delta``, the constructed recovery and the KL residual per ``gamma``.

    ``code`` is a key of :data:`CODES`; every physical qubit is damped. Points
    run in up to ``workers`` processes (``AQEC_THREADS`` by default) and come
    back in grid order.
    """
    if code not in CODES:
        raise AQECError("bad-param", f"unknown code {code!r}; choose from {sorted(CODES)}")
    cfg = cfg or MinimizerConfig()
    jobs = [(float(g), code, cfg) for g in gammas]
    workers = workers or _workers()
    if workers == 1 or len(jobs) < 2:
        return [_sweep_point(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(_sweep_point, jobs))


def sweep_csv(rows) -> str:
    return "".join([CSV_HEADER + "\n"] + [row.csv() + "\n" for row in rows])


_PLOT_SCRIPT = """\
# gnuplot script for {csv}
set datafile separator ","
set logscale xy
set key left top
set xlabel "gamma"
set ylabel "distance"
plot "{csv}" using 1:2 skip 1 with lines dashtype 3 title "uncorrected", \\
     "{csv}" using 1:3 skip 1 with lines dashtype 2 title "delta", \\
     "{csv}" using 1:4 skip 1 with lines title "near-optimal recovery", \\
     "{csv}" using 1:5 skip 1 with points title "KL residual"
"""


def theorem1_table(dim: int = 2, kraus: int = 2, instances: int = 10, seed: int = 0, cfg: SeesawConfig | None = None):
    """Gaps between the two sides of the recovery/complement duality on seeded random channels."""
    if dim < 1 or kraus < 1 or instances < 0:
        raise AQECError("bad-range", "dim and kraus must be positive, instances non-negative")
    gaps = []
    for child in np.random.SeedSequence(seed).spawn(instances):
        n = random_channel(dim, dim, kraus, np.random.default_rng(child))
        gaps.append(theorem1_gap(n, identity_channel(dim), trace_channel(dim), cfg))
    return gaps


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise AQECError("parse", f"cannot read {path}: {exc.strerror}") from exc


def _load_channel(path: str) -> ChannelRep:
    return channel_from_json(_read(path))


def _load_state(path: str | None, name: str):
    return None if path is None else check_density(state_from_json(_read(path)), name)


def _minimizer(args) -> MinimizerConfig:
    return MinimizerConfig(random_starts=args.starts, tol=args.tol, seed=args.seed)


def _emit(doc) -> None:
    print(json.dumps(doc, indent=2))


def cmd_check(args) -> int:
    code = code_from_json(_read(args.code_file))
    noise = _load_channel(args.channel_file)
    sigma = _load_state(args.sigma, "sigma")
    passes, _ = kl_check_exact(code, noise, args.tol)
    report = kl_residual(code, noise, sigma, _minimizer(args))
    doc = report.to_dict()
    doc["exact"] = bool(passes)
    _emit(doc)
    return EXIT_OK


def cmd_estimate(args) -> int:
    noise = _load_channel(args.channel_file)
    est = delta_estimate_id(noise, _load_state(args.sigma, "sigma"), _minimizer(args))
    _emit(est.to_dict())
    return EXIT_OK


def cmd_recover(args) -> int:
    noise = _load_channel(args.channel_file)
    cfg = _minimizer(args)
    est = delta_estimate_id(noise, _load_state(args.sigma, "sigma"), cfg)
    saddle = find_saddle(noise, cfg=cfg, estimate=est)
    r = build_recovery(saddle, _load_state(args.tau, "tau"))
    dist, passes = verify_guarantee(r, noise, est, cfg)
    report = {"delta": est.delta, "achieved": dist, "passes": bool(passes), "out": args.out}
    if not passes:
        report["out"] = None
        _emit(report)
        raise AQECError("guarantee-violated", f"recovery reaches {dist:.6e} > delta {est.delta:.6e}")
    Path(args.out).write_text(channel_to_json(r))
    _emit(report)
    return EXIT_OK


def cmd_scan_gamma(args) -> int:
    grid = gamma_grid(args.gamma_min, args.gamma_max, args.steps)
    rows = scan_gamma(grid, args.code, _minimizer(args))
    text = sweep_csv(rows)
    if args.out == "-":
        sys.stdout.write(text)
        return EXIT_OK
    out = Path(args.out)
    out.write_bytes(text.encode())
    if args.plot:
        out.with_suffix(".gp").write_text(_PLOT_SCRIPT.format(csv=out.name))
    print(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


def cmd_theorem1(args) -> int:
    cfg = SeesawConfig(seed=args.seed)
    gaps = theorem1_table(args.dim, args.kraus, args.instances, args.seed, cfg)
    print("instance,gap")
    for i, g in enumerate(gaps):
        print(f"{i},{g:.6e}")
    print(f"max gap: {max(gaps, default=0.0):.6e}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aqec", description="Approximate quantum error correction toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def minimizer_flags(sp, tol=1e-8):
        sp.add_argument("--starts", type=int, default=16, help="random starts for worst-case searches")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tol", type=float, default=tol)

    sp = sub.add_parser("check", help="Knill-Laflamme test and perturbed residual")
    sp.add_argument("code_file")
    sp.add_argument("channel_file")
    sp.add_argument("--sigma", help="physical-space state for the lambda guess")
    minimizer_flags(sp, tol=1e-9)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("estimate", help="delta estimate for a logical-to-physical channel")
    sp.add_argument("channel_file")
    sp.add_argument("--sigma", help="logical state defining the complement of the identity")
    minimizer_flags(sp)
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("recover", help="construct the near-optimal recovery")
    sp.add_argument("channel_file")
    sp.add_argument("--sigma")
    sp.add_argument("--tau", help="completion state, maximally mixed by default")
    sp.add_argument("--out", default="recovery.json")
    minimizer_flags(sp)
    sp.set_defaults(func=cmd_recover)

    sp = sub.add_parser("scan-gamma", help="amplitude-damping sweep as CSV")
    sp.add_argument("--gamma-min", type=float, default=0.01)
    sp.add_argument("--gamma-max", type=float, default=0.5)
    sp.add_argument("--steps", type=int, default=25)
    sp.add_argument("--code", choices=sorted(CODES), default="leung")
    sp.add_argument("--out", default="sweep.csv", help="CSV path, '-' for stdout")
    sp.add_argument("--plot", action="store_true", help="also write a gnuplot script next to the CSV")
    minimizer_flags(sp)
    sp.set_defaults(func=cmd_scan_gamma)

    sp = sub.add_parser("theorem1", help="numerical check of the recovery/complement duality")
    sp.add_argument("--dim", type=int, default=2)
    sp.add_argument("--kraus", type=int, default=2)
    sp.add_argument("--instances", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_theorem1)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except AQECError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return _EXIT_BY_CODE.get(exc.code, EXIT_DIMS)


if __name__ == "__main__":
    sys.exit(main())

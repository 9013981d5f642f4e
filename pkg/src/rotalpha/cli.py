"""Command-line entry point: ``rotalpha <command> [--config PATH] ...``.

Exit status is 0 on success, 1 on a numerical failure or a violated identity
and 2 on a usage or configuration error.  Every file written starts with
provenance lines (config hash, seed, tolerances, version) and nothing that
depends on the thread count or wall clock.
"""
from __future__ import annotations

import argparse
import functools
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import fft
from .bounds import BoundConstants, alpha_sweep, dimension_bounds, write_report_csv
from .config import ConfigError, RunConfig, dump_config, load_config, parse_config, provenance_lines
from .field import SpectralField, default_profile, random_field, write_snapshot
from .integrator import (BlowUpError, RankLossError, alpha_zero_comparison, forcing_field, simulate,
                         variational_trace, write_diagnostics_csv)
from .resonance import ClassificationError, enumerate_resonances, small_divisor_histogram
from .verify import run_identity_suite

__all__ = ["COMMANDS", "DEFAULT_CONFIG", "dispatch", "main"]

COMMANDS = ("simulate", "limit-sim", "resonances", "bounds", "compare", "verify")

# used when --config is omitted; every other key takes its documented default
DEFAULT_CONFIG = "[physics]\nnu = 0.05\n"

EXIT_OK, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2


class _Out:
    def __init__(self, cfg: RunConfig, command: str, directory: Path, quiet: bool):
        self.cfg, self.command, self.dir, self.quiet = cfg, command, directory, quiet
        self.dir.mkdir(parents=True, exist_ok=True)

    def header(self, **extra) -> list[str]:
        return provenance_lines(self.cfg, self.command, extra)

    def path(self, name: str) -> Path:
        return self.dir / name

    def say(self, msg: str) -> None:
        if not self.quiet:
            print(msg)

    def mark_incomplete(self, reason: str) -> None:
        lines = self.header() + [f"INCOMPLETE: {reason}"]
        self.path("INCOMPLETE").write_text("\n".join(lines) + "\n")


def initial_field(cfg: RunConfig) -> SpectralField:
    amp, k0 = cfg.initial.amplitude, cfg.initial.k0
    profile = functools.partial(_scaled_profile, amp=amp, k0=k0)
    return random_field(cfg.domain_params(), cfg.numerics.cutoff, cfg.run.seed, profile)


def _scaled_profile(k, amp, k0):
    return amp * amp * default_profile(k, k0)


def _write_run(out: _Out, res, alpha: float, t_end: float, note: str = "") -> None:
    hdr = out.header(**({"status": note} if note else {}))
    write_diagnostics_csv(out.path("diagnostics.csv"), res.rows, hdr)
    write_snapshot(out.path("final.snap"), res.final, alpha, res.rows[-1].t if res.rows else t_end,
                   provenance="\n".join(hdr))


def _run_system(out: _Out, system: str, triads=None) -> int:
    cfg = out.cfg
    scfg = cfg.solver()
    v0 = initial_field(cfg)
    try:
        res = simulate(scfg, v0, system=system, triads=triads)
    except BlowUpError as exc:
        if exc.partial is not None:
            _write_run(out, exc.partial, scfg.alpha, exc.t, note=f"incomplete ({exc})")
        out.mark_incomplete(str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    _write_run(out, res, scfg.alpha, scfg.t_end)
    last = res.rows[-1]
    out.say(f"{system}: t={last.t:.6g} energy={last.l2_energy:.6e} "
            f"alpha_energy={last.alpha_energy:.6e} div={last.divergence_residual:.2e}")
    return EXIT_OK


def cmd_simulate(out: _Out, threads: int) -> int:
    return _run_system(out, "rns")


def _triads(cfg: RunConfig, threads: int):
    return enumerate_resonances(cfg.domain_params(), cfg.physics.alpha, cfg.numerics.cutoff,
                                tol=cfg.tolerances.resonance, threads=threads)


def cmd_limit_sim(out: _Out, threads: int) -> int:
    cfg = out.cfg
    triads = _triads(cfg, threads)
    code = _run_system(out, "limit", triads)
    if code != EXIT_OK or cfg.trace.N == 0:
        return code
    scfg = cfg.solver()
    v0 = initial_field(cfg)
    try:
        tr = variational_trace(v0, scfg, cfg.trace.N, triads=triads, every=cfg.trace.every)
    except (BlowUpError, RankLossError) as exc:
        out.mark_incomplete(f"variational trace: {exc}")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    with open(out.path("trace.csv"), "w") as fh:
        for line in out.header(N=cfg.trace.N):
            fh.write(f"# {line}\n")
        fh.write("t,trace,q,split_full,split_reduced,split_dim\n")
        for i in range(tr.times.size):
            vals = (tr.times[i], tr.full[i], tr.q[i], tr.split_full[i], tr.split_reduced[i])
            fh.write(",".join(repr(float(x)) for x in vals) + f",{int(tr.split_dim[i])}\n")
    out.say(f"trace: N={cfg.trace.N} mean={tr.mean:.6e}")
    return EXIT_OK


def cmd_resonances(out: _Out, threads: int) -> int:
    cfg = out.cfg
    try:
        triads = _triads(cfg, threads)
    except ClassificationError as exc:
        out.mark_incomplete(str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    hdr = out.header()
    triads.to_csv(out.path("triads.csv"), hdr)
    hist = small_divisor_histogram(cfg.domain_params(), cfg.physics.alpha, cfg.numerics.cutoff,
                                   tol=cfg.tolerances.resonance)
    hist.to_csv(out.path("divisors.csv"), hdr)
    counts = triads.counts
    summary = [f"{k} {v}" for k, v in counts.items()]
    summary.append(f"total {len(triads)}")
    summary.append(f"min_gap {hist.min_gap!r}")
    with open(out.path("summary.txt"), "w") as fh:
        fh.write("".join(f"# {line}\n" for line in hdr))
        fh.write("\n".join(summary) + "\n")
    out.say("\n".join(summary))
    return EXIT_OK


def _bound_inputs(cfg: RunConfig):
    b = cfg.bounds
    consts = BoundConstants(b.c_l, b.c_tilde, b.c0, b.K_tilde, b.c1 if b.c1 > 0 else None)
    eps = None if b.epsilon < 0 else b.epsilon
    return consts, eps


def cmd_bounds(out: _Out, threads: int) -> int:
    cfg = out.cfg
    b = cfg.bounds
    f = forcing_field(cfg.solver())
    consts, eps = _bound_inputs(cfg)
    rep = dimension_bounds(cfg.physics.alpha, cfg.physics.nu, f, consts, eps, b.assume_limit,
                           b.sum_cutoff)
    hdr = out.header()
    write_report_csv(out.path("bounds.csv"), [rep], hdr)
    with open(out.path("bounds.txt"), "w") as fh:
        fh.write("".join(f"# {line}\n" for line in hdr))
        fh.write(rep.text() + "\n")
    if b.alphas:
        reps = alpha_sweep(b.alphas, cfg.physics.nu, f, consts, eps, b.assume_limit, b.sum_cutoff)
        write_report_csv(out.path("bounds_sweep.csv"), reps, hdr)
    out.say(rep.text())
    if rep.divergence_flag:
        print(f"warning: {rep.divergence_flag}", file=sys.stderr)
    return EXIT_OK


def cmd_compare(out: _Out, threads: int) -> int:
    cfg = out.cfg
    v0 = initial_field(cfg)
    try:
        rows = alpha_zero_comparison(cfg.solver(), cfg.compare.alphas, v0)
    except BlowUpError as exc:
        out.mark_incomplete(str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    dist = [r.sup_distance for r in rows]
    order = np.argsort([-r.alpha for r in rows], kind="stable")
    ordered = [dist[i] for i in order]
    monotone = all(b < a for a, b in zip(ordered, ordered[1:]))
    with open(out.path("compare.csv"), "w") as fh:
        for line in out.header(monotone=monotone):
            fh.write(f"# {line}\n")
        fh.write("alpha,sup_distance,final_distance\n")
        for r in rows:
            fh.write(f"{r.alpha!r},{r.sup_distance!r},{r.final_distance!r}\n")
    for r in rows:
        out.say(f"alpha={r.alpha:<8g} sup={r.sup_distance:.6e} final={r.final_distance:.6e}")
    out.say(f"strictly decreasing as alpha decreases: {monotone}")
    return EXIT_OK


def cmd_verify(out: _Out, threads: int) -> int:
    cfg = out.cfg
    tol = cfg.tolerances
    rep = run_identity_suite(cfg.domain_params(), min(cfg.numerics.cutoff, 6), cfg.physics.alpha,
                             cfg.verify.samples, cfg.run.seed, identity_tol=tol.identity,
                             propagator_tol=tol.propagator, path_tol=tol.path_agreement,
                             nu=cfg.physics.nu)
    rep.write_csv(out.path("verify.csv"), out.header(passed=rep.passed))
    out.say(rep.text())
    if not rep.passed:
        names = ", ".join(c.name for c in rep.failures())
        print(f"identity violations: {names}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


HANDLERS = {
    "simulate": cmd_simulate,
    "limit-sim": cmd_limit_sim,
    "resonances": cmd_resonances,
    "bounds": cmd_bounds,
    "compare": cmd_compare,
    "verify": cmd_verify,
}


def dispatch(command: str, cfg: RunConfig, out_dir=None, threads: int = 1,
             quiet: bool = False) -> int:
    """Run one command; returns the exit status."""
    if command not in HANDLERS:
        print(f"unknown command {command!r}; choose from {', '.join(COMMANDS)}", file=sys.stderr)
        return EXIT_USAGE
    workers = fft.set_threads(threads)
    out = _Out(cfg, command, Path(out_dir if out_dir is not None else cfg.run.out), quiet)
    # the echoed config names its own directory so two output trees compare equal
    (out.dir / "config.toml").write_text(dump_config(cfg.with_out(".")))
    stale = out.path("INCOMPLETE")
    if stale.exists():
        stale.unlink()
    try:
        return HANDLERS[command](out, workers)
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        out.mark_incomplete(f"{type(exc).__name__}: {exc}")
        print(f"error in {command}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="TOML run configuration (default: built-in, nu = 0.05)")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides run.out)")
    common.add_argument("--threads", type=int, default=1, metavar="N",
                        help="worker threads, 0 = one per CPU (results do not depend on N)")
    common.add_argument("--seed", type=int, metavar="U64", help="overrides run.seed")
    common.add_argument("--quiet", action="store_true", help="no summary on stdout")
    p = argparse.ArgumentParser(prog="rotalpha",
                                description="Rotating Navier-Stokes-alpha spectral toolkit.")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "simulate": "integrate the rotating alpha model",
        "limit-sim": "integrate the catalytic resonant limit (and its tangent traces)",
        "resonances": "enumerate and classify resonant triads",
        "bounds": "evaluate the attractor-dimension bound chain",
        "compare": "distance between alpha > 0 and alpha = 0 runs",
        "verify": "run the operator identity suite",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 0:
        print("error: --threads must be >= 0", file=sys.stderr)
        return EXIT_USAGE
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(args.config) if args.config else parse_config(DEFAULT_CONFIG)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.out is not None:
        cfg = cfg.with_out(args.out)
    return dispatch(args.command, cfg, cfg.run.out, args.threads, args.quiet)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

"""Cross-check of the bound chain against the tangent flow of the limit system.

Runs the catalytic limit system, estimates epsilon from the barotropic
enstrophy along the trajectory, evaluates ``N_threshold`` and integrates
``N = ceil(N_threshold)`` tangent vectors to see whether their running trace
is negative.
"""
import argparse
import math

import numpy as np

from rotalpha.bounds import BoundConstants, c_of_q, dimension_bounds, epsilon_estimate
from rotalpha.field import barotropic_part, random_field
from rotalpha.integrator import ForcingMode, SolverConfig, forcing_field, simulate, variational_trace
from rotalpha.lattice import DomainParams


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--cutoff", type=int, default=6)
    p.add_argument("--nu", type=float, default=0.1)
    p.add_argument("--omega", type=float, default=10.0)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--forcing", type=float, default=0.01, help="amplitude at n = (1, 0, 0)")
    p.add_argument("--dt", type=float, default=0.02)
    p.add_argument("--T", type=float, default=0.5)
    p.add_argument("--max-N", type=int, default=32)
    p.add_argument("--seed", type=int, default=21)
    args = p.parse_args()

    domain = DomainParams(a2=1.3, a3=0.7)
    cfg = SolverConfig(nu=args.nu, omega_big=args.omega, alpha=args.alpha, cutoff=args.cutoff,
                       dt=args.dt, t_end=args.T, domain=domain, checkpoint_every=5,
                       forcing=(ForcingMode((1, 0, 0), (0, args.forcing, 0)),))
    w0 = random_field(domain, args.cutoff, args.seed) * args.forcing
    res = simulate(cfg, w0, "limit", keep_states=True)
    lat = w0.lattice
    ens = [float(np.sum(np.abs(barotropic_part(s).coeffs) ** 2 * lat.norm_sq)) for s in res.states()]
    eps = epsilon_estimate(ens, [r.t for r in res.rows], cfg.nu)
    unit_d = BoundConstants(c0=4.0 * c_of_q(5.0 / 3.0) ** (1.0 / 3.0))
    rep = dimension_bounds(args.alpha, args.nu, forcing_field(cfg), unit_d, epsilon=eps)
    print(f"epsilon estimate {eps:.4e}, N_threshold {rep.N_threshold:.4f}")
    N = max(1, math.ceil(rep.N_threshold))
    if N > args.max_N:
        print(f"N = {N} exceeds --max-N; skipping the tangent run")
        return
    tr = variational_trace(w0, cfg, N, every=5)
    print(f"N = {N}: running trace q_N(T) = {tr.q[-1]:.4f} ({'negative' if tr.q[-1] < 0 else 'NOT negative'})")


if __name__ == "__main__":
    main()

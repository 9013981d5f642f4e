"""Count strict three-wave resonances on randomly sampled boxes."""
import argparse

from rotalpha.resonance import generic_domain_search, uniform_box_sampler


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--cutoff", type=int, default=6)
    p.add_argument("--trials", type=int, default=8)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--lo", type=float, default=0.5)
    p.add_argument("--hi", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    rows = generic_domain_search(uniform_box_sampler(args.lo, args.hi), args.cutoff, args.tol,
                                 args.trials, args.seed)
    print(f"strict resonances at cutoff {args.cutoff}, tol {args.tol:g} (box (1, 1) is the control)")
    for a2, a3, count in rows:
        print(f"a2={a2:.6f} a3={a3:.6f} KSTAR={count}")


if __name__ == "__main__":
    main()

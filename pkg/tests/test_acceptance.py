"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""
import math
import time
from dataclasses import replace

import numpy as np
import pytest

from oracles import cube_resonances
from rotalpha.bounds import (BoundConstants, FormulaDivergence, K_alpha, c_alpha_closed,
                             c_alpha_lattice, c_of_q, dimension_bounds, lattice_gap_c1)
from rotalpha.cli import main
from rotalpha.field import baroclinic_part, barotropic_part, random_field
from rotalpha.integrator import (ForcingMode, SolverConfig, alpha_zero_comparison, forcing_field,
                                 simulate)
from rotalpha.lattice import DomainParams, lattice
from rotalpha.poincare import PropagatorParams, apply_propagator, fast_average_experiment
from rotalpha.resonance import (enumerate_resonances, generic_domain_search, kstar_count,
                                uniform_box_sampler)
from rotalpha.verify import (c_of_q_residuals, catalytic_path_residual, lemma_residuals,
                             orthogonality_residuals, propagator_residuals)

BOX = DomainParams(a2=1.3, a3=0.7)
CUBE = DomainParams(a2=1.0, a3=1.0)
GENERIC = DomainParams(a2=2 ** 0.25, a3=3 ** 0.25)
FORCING = (ForcingMode((1, 0, 0), (0, 1, 0)), ForcingMode((0, 1, 1), (1, 0, 0)))


@pytest.fixture
def report(capsys):
    def _report(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance {number:>2}] {'PASS' if ok else 'FAIL'}  {title}: {detail}")
        assert ok, detail
    return _report


def test_01_lemma_identity(report):
    t0 = time.perf_counter()
    r = lemma_residuals(BOX, 4, 0.5, 100, seed=1, path="direct")
    dt = time.perf_counter() - t0
    report(1, "bilinear lemma", r.max() <= 1e-12 and dt < 10.0,
           f"max relative residual {r.max():.2e} over 100 triples, {dt:.1f} s")


def test_02_orthogonality(report):
    r = orthogonality_residuals(BOX, 4, 0.5, 100, seed=2)
    worst = max(r, key=r.get)
    report(2, "orthogonality identities", max(r.values()) <= 1e-12,
           f"{len(r)} identities, worst {worst} = {r[worst]:.2e}")


def test_03_propagator(report):
    r = propagator_residuals(BOX, 6, 0.5, seed=3)
    exact = r.pop("propagator_identity_at_zero")
    worst = max(r, key=r.get)
    report(3, "propagator laws", r[worst] <= 1e-12 and exact == 0.0,
           f"worst {worst} = {r[worst]:.2e}, |E(0)v - v| = {exact}")


@pytest.mark.slow
@pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0])
def test_04_conservation(report, alpha):
    cfg = SolverConfig(nu=0.0, omega_big=10.0, alpha=alpha, cutoff=6, dt=1e-3, t_end=1.0,
                       domain=BOX, checkpoint_every=1)
    res = simulate(cfg, random_field(BOX, 6, 4))
    e = np.array([row.alpha_energy for row in res.rows])
    drift = float(np.abs(e / e[0] - 1).max())
    div = max(row.divergence_residual for row in res.rows)
    report(4, f"alpha-energy conservation (alpha={alpha})", drift <= 1e-8 and div <= 1e-10,
           f"relative drift {drift:.2e}, divergence residual {div:.2e}")


@pytest.mark.slow
def test_05_fast_averaging(report):
    lat = lattice(BOX, 4)
    support = np.abs(lat.ints).max(axis=0) <= 1
    V = random_field(BOX, 4, 6, support=support)
    triads = enumerate_resonances(BOX, 0.0, 4, tol=1e-9)
    t0 = time.perf_counter()
    rows = fast_average_experiment(V, 0.0, [1e2, 1e3, 1e4], 1.0, triads)
    dt = time.perf_counter() - t0
    slope = np.polyfit(np.log([r.omega_big for r in rows]), np.log([r.residual_norm for r in rows]), 1)[0]
    report(5, "fast averaging decay", -1.3 <= slope <= -0.7 and dt < 300.0,
           f"residuals {[f'{r.residual_norm:.2e}' for r in rows]}, slope {slope:.3f}, {dt:.0f} s")


def test_06_resonances(report):
    oracle = enumerate_resonances(CUBE, 0.0, 2).as_tuples() == cube_resonances(2)
    generic = kstar_count(GENERIC, 0.0, 8, 1e-9)
    sampled = generic_domain_search(uniform_box_sampler(), 8, trials=1, seed=0)
    cube = kstar_count(CUBE, 0.0, 8, 1e-9)
    sets = [enumerate_resonances(BOX, a, 4) for a in (0.0, 0.5, 1.0)]
    two_wave = [{t for t in s.as_tuples() if t[3] != "KSTAR"} for s in sets]
    invariant = two_wave[0] == two_wave[1] == two_wave[2]
    sampled_zero = all(c == 0 for a2, a3, c in sampled if (a2, a3) != (1.0, 1.0))
    ok = oracle and generic == 0 and sampled_zero and cube > 0 and invariant
    report(6, "resonance enumeration", ok,
           f"oracle match {oracle}, KSTAR generic {generic}, sampled {sampled}, cube {cube}, "
           f"two-wave alpha-invariant {invariant}")


@pytest.mark.slow
def test_07_catalytic_paths_and_barotropic_invariance(report):
    path = catalytic_path_residual(BOX, 6, 0.5, seed=7)
    cfg = SolverConfig(nu=0.05, omega_big=10.0, alpha=0.5, cutoff=4, dt=0.01, t_end=0.5,
                       domain=BOX, forcing=FORCING, checkpoint_every=1)
    w0 = barotropic_part(random_field(BOX, 4, 8))
    triads = enumerate_resonances(BOX, 0.5, 4)
    res = simulate(cfg, w0, "limit", triads=triads, keep_states=True)
    baro = max(float(np.sum(np.abs(baroclinic_part(s).coeffs) ** 2)) for s in res.states())
    report(7, "catalytic operator", path <= 1e-10 and baro <= 1e-20,
           f"path difference {path:.2e}, max baroclinic energy {baro:.1e}")


def test_08_c_of_q(report):
    r = c_of_q_residuals(10_000, seed=9)
    ok = (r["c_of_q_violations"] == 0 and r["c_of_q_equality"] <= 1e-15
          and c_of_q(5.0 / 3.0) == 0.25 ** (1.0 / 3.0))
    report(8, "c(q) inequality", ok, f"violations {int(r['c_of_q_violations'])}, "
           f"equality residual {r['c_of_q_equality']:.1e}, c(5/3) = {c_of_q(5.0 / 3.0)!r}")


def test_09_bounds(report):
    c2 = c_alpha_closed(1.0, 1.0) ** 2
    unit = BoundConstants(c0=4.0 * c_of_q(5.0 / 3.0) ** (1.0 / 3.0))
    K, K0 = K_alpha(0.5, unit, c_alpha=math.sqrt(2.0))
    ref = (24 * math.sqrt(2.0) + 1) ** 1.5
    k_ok = abs(K - ref) <= 1e-12 * ref and abs(K0 - ref) <= 1e-12 * ref
    c1 = lattice_gap_c1(BOX, 64)
    sums_ok = all(c_alpha_lattice(BOX, a, 64).upper <= c_alpha_closed(a, c1) ** 2
                  for a in (0.25, 0.5, 1.0, 2.0, 4.0))
    f = forcing_field(SolverConfig(nu=0.1, omega_big=1.0, alpha=0.5, cutoff=4, dt=0.1, t_end=0.1,
                                   domain=BOX, forcing=FORCING))
    rep = dimension_bounds(0.5, 0.1, f)
    names = {k for k, _ in rep.rows()}
    labeled = {"dH_bound_main", "dH_bound_derivation"} <= names
    try:
        c_alpha_closed(0.0, c1)
        raised = False
    except FormulaDivergence:
        raised = True
    flagged = bool(dimension_bounds(0.0, 0.1, f).divergence_flag) and raised
    ok = abs(c2 - 0.75) <= 1e-15 and k_ok and sums_ok and labeled and flagged
    report(9, "bounds calculator", ok,
           f"c^2(1) = {c2!r}, K0 = {K0:.12f}, lattice <= closed {sums_ok}, "
           f"exponent forms labeled {labeled}, alpha=0 flagged {flagged}")


@pytest.mark.slow
def test_10_alpha_to_zero(report):
    cfg = SolverConfig(nu=0.05, omega_big=10.0, alpha=0.0, cutoff=8, dt=0.005, t_end=0.5,
                       domain=BOX, forcing=FORCING, checkpoint_every=10)
    t0 = time.perf_counter()
    rows = alpha_zero_comparison(cfg, [0.4, 0.2, 0.1, 0.05], random_field(BOX, 8, 10))
    dt = time.perf_counter() - t0
    d = [r.sup_distance for r in rows]
    ok = all(b < a for a, b in zip(d, d[1:])) and dt < 600.0
    report(10, "alpha -> 0 convergence", ok,
           f"sup distances {[f'{x:.3e}' for x in d]}, {dt:.0f} s")


@pytest.mark.slow
def test_11_integrator_order(report):
    cfg = SolverConfig(nu=0.05, omega_big=5.0, alpha=0.2, cutoff=4, dt=0.04, t_end=0.8,
                       domain=BOX, forcing=FORCING)
    v0 = random_field(BOX, 4, 3) * 0.3
    sols = [simulate(replace(cfg, dt=h), v0).final for h in (0.04, 0.02, 0.01, 0.005)]
    diffs = [(a - b).max_abs() for a, b in zip(sols, sols[1:])]
    orders = [math.log2(a / b) for a, b in zip(diffs, diffs[1:])]
    lin_err = 0.0
    for h in (0.4, 0.1, 0.025):
        lcfg = replace(cfg, nonlinear=False, forcing=(), dt=h, t_end=0.8)
        got = simulate(lcfg, v0).final
        t = lcfg.steps * h
        ref = apply_propagator(v0, PropagatorParams(5.0, 0.2, -t))
        ref = ref.scale_modes(np.exp(-0.05 * t * v0.lattice.norm_sq))
        lin_err = max(lin_err, (got - ref).max_abs())
    ok = all(3.7 <= p <= 4.3 for p in orders) and lin_err <= 1e-12
    report(11, "integrator order", ok,
           f"observed orders {[f'{p:.3f}' for p in orders]}, linear-flow error {lin_err:.1e}")


@pytest.mark.slow
def test_12_thread_reproducibility(report, tmp_path):
    import filecmp
    cfg = tmp_path / "c.toml"
    cfg.write_text("[physics]\nnu = 0.05\nomega = 10.0\nalpha = 0.3\n[numerics]\ncutoff = 4\n"
                   "dt = 0.01\nt_end = 0.1\n[trace]\nN = 2\n[[forcing]]\nn = [1, 0, 0]\n"
                   "re = [0.0, 1.0, 0.0]\n")
    same = {}
    for command in ("simulate", "limit-sim", "resonances", "bounds", "compare", "verify"):
        for n in (1, 8):
            code = main([command, "--config", str(cfg), "--seed", "42", "--threads", str(n),
                         "--out", str(tmp_path / command / str(n)), "--quiet"])
            assert code == 0, (command, n, code)
        a, b = tmp_path / command / "1", tmp_path / command / "8"
        cmp = filecmp.dircmp(a, b)
        files = sorted(p.name for p in a.iterdir())
        same[command] = (not (cmp.left_only or cmp.right_only or cmp.funny_files)
                         and all(p.read_bytes() == (b / p.name).read_bytes() for p in a.iterdir()))
        assert files
    report(12, "thread reproducibility", all(same.values()),
           ", ".join(f"{k} {'identical' if v else 'DIFFERENT'}" for k, v in same.items()))

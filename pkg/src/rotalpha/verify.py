"""Identity suite: every algebraic law the solver relies on, as residuals.

Each check is evaluated on seeded random divergence-free fields and reported
as ``(name, residual, tolerance)``.  Residuals of trilinear forms are relative
to ``|a| |b|_1 |c|`` so that field amplitude does not matter.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bounds import c_of_q
from .field import SpectralField, inner_product, norms, random_field
from .lattice import DomainParams, lattice
from .nonlinear import (bilinear_alpha, bilinear_classical, catalytic_form, coriolis_blocks,
                        stokes_apply, verify_orthogonality_identities)
from .poincare import propagator_blocks
from .resonance import enumerate_resonances

__all__ = [
    "Check",
    "IdentityReport",
    "lemma_residuals",
    "neutrality_residuals",
    "orthogonality_residuals",
    "propagator_residuals",
    "c_of_q_residuals",
    "run_identity_suite",
]


@dataclass(frozen=True)
class Check:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tolerance)


@dataclass(frozen=True)
class IdentityReport:
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def text(self) -> str:
        width = max(len(c.name) for c in self.checks)
        lines = [f"{c.name:<{width}}  {c.residual:.3e}  <= {c.tolerance:.1e}  "
                 f"{'ok' if c.passed else 'VIOLATED'}" for c in self.checks]
        return "\n".join(lines)

    def write_csv(self, path, header_lines: Sequence[str] = ()) -> None:
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["check", "residual", "tolerance", "passed"])
            for c in self.checks:
                w.writerow([c.name, repr(c.residual), repr(c.tolerance), int(c.passed)])


def _fields(domain, cutoff, seed, count):
    seeds = np.random.SeedSequence(seed).generate_state(count, dtype=np.uint64)
    return [random_field(domain, cutoff, int(s)) for s in seeds]


def _scale(a: SpectralField, b: SpectralField, c: SpectralField) -> float:
    return norms(a).l2 * norms(b).h1 * norms(c).l2


def lemma_residuals(domain: DomainParams, cutoff: int, alpha: float, samples: int,
                    seed: int = 0, path: str = "direct") -> np.ndarray:
    """Relative residuals of ``<B_a(u,v),w> - <B(R u,v),w> + <B(w,v),R u>`` per triple."""
    fs = _fields(domain, cutoff, seed, 3 * samples)
    lat = lattice(domain, cutoff)
    out = np.empty(samples)
    for i in range(samples):
        u, v, w = fs[3 * i:3 * i + 3]
        ru = u.scale_modes(lat.helmholtz(alpha))
        r = (inner_product(bilinear_alpha(u, v, alpha, path=path), w)
             - inner_product(bilinear_classical(ru, v, path=path), w)
             + inner_product(bilinear_classical(w, v, path=path), ru))
        out[i] = abs(r) / _scale(u, v, w)
    return out


def neutrality_residuals(domain: DomainParams, cutoff: int, alpha: float, samples: int,
                         seed: int = 0, path: str = "fft") -> dict:
    """Worst relative ``<B(u,v),v>`` and ``<B_a(v,v),R_a v>`` over random fields."""
    fs = _fields(domain, cutoff, seed + 1, 2 * samples)
    lat = lattice(domain, cutoff)
    classical = alpha_form = 0.0
    for i in range(samples):
        u, v = fs[2 * i:2 * i + 2]
        rv = v.scale_modes(lat.helmholtz(alpha))
        classical = max(classical, abs(inner_product(bilinear_classical(u, v, path), v))
                        / _scale(u, v, v))
        alpha_form = max(alpha_form, abs(inner_product(bilinear_alpha(v, v, alpha, path), rv))
                         / _scale(v, v, v))
    return {"energy_neutral_classical": classical, "energy_neutral_alpha": alpha_form}


def orthogonality_residuals(domain: DomainParams, cutoff: int, alpha: float, samples: int,
                            seed: int = 0, nu: float = 1.0) -> dict:
    """Worst residual per orthogonality identity over ``samples`` random pairs."""
    triads = enumerate_resonances(domain, alpha, cutoff)
    fs = _fields(domain, cutoff, seed + 2, 2 * samples)
    worst: dict = {}
    for i in range(samples):
        rep = verify_orthogonality_identities(fs[2 * i], fs[2 * i + 1], alpha, triads, nu)
        for k, v in rep.residuals.items():
            worst[k] = max(worst.get(k, 0.0), v)
    return worst


def catalytic_path_residual(domain: DomainParams, cutoff: int, alpha: float, seed: int = 0) -> float:
    """``max |physical - resonant|`` for the catalytic operator on one random field."""
    w = _fields(domain, cutoff, seed + 3, 1)[0]
    triads = enumerate_resonances(domain, alpha, cutoff)
    a = catalytic_form(w, w, alpha, path="physical")
    b = catalytic_form(w, w, alpha, path="resonant", triads=triads)
    return (a - b).max_abs()


def _blockmul(a, b):
    return np.einsum("ij...,jk...->ik...", a, b)


def _herm(a):
    return np.conj(np.swapaxes(a, 0, 1))


def propagator_residuals(domain: DomainParams, cutoff: int, alpha: float, seed: int = 0) -> dict:
    """Group-law residuals of ``E(tau)`` over every lattice mode.

    Unitarity, group law and inverse are measured on the divergence-free
    subspace (``P E^H E P = P``).  ``E(0)`` must reproduce divergence-free
    fields bit-for-bit.
    """
    lat = lattice(domain, cutoff)
    rng = np.random.default_rng(seed)
    t1, t2 = rng.uniform(-50.0, 50.0, size=2)
    c = lat.check
    P = np.eye(3).reshape(3, 3, 1, 1, 1) - np.einsum("i...,j...->ij...", c, c) * lat.inv_norm_sq
    P = P * lat.nonzero
    E1, E2 = propagator_blocks(lat, alpha, t1), propagator_blocks(lat, alpha, t2)
    E12 = propagator_blocks(lat, alpha, t1 + t2)
    Em = propagator_blocks(lat, alpha, -t1)
    R = lat.helmholtz(alpha) * lat.nonzero
    A = lat.norm_sq
    E1P = _blockmul(E1, P)
    r = {
        "propagator_unitary": np.abs(_blockmul(_herm(E1P), E1P) - P).max(),
        "propagator_group_law": np.abs(_blockmul(_blockmul(E1, E2) - E12, P)).max(),
        "propagator_inverse": np.abs(_blockmul(_blockmul(E1, Em), P) - P).max(),
        "propagator_commutes_leray": np.abs(E1P - _blockmul(P, E1)).max(),
        "propagator_commutes_stokes": np.abs(E1 * A - A * E1).max(),
        "propagator_commutes_helmholtz": np.abs(E1 * R - R * E1).max(),
        "propagator_commutes_coriolis": np.abs(
            _blockmul(E1P, coriolis_blocks(lat, alpha)) - _blockmul(coriolis_blocks(lat, alpha), E1P)
        ).max(),
    }
    v = random_field(domain, cutoff, seed)
    e0 = propagator_blocks(lat, alpha, 0.0)
    r["propagator_identity_at_zero"] = float(np.abs(v.apply_blocks(e0).coeffs - v.coeffs).max())
    r["stokes_commutes_leray"] = float(np.abs(
        stokes_apply(v.apply_blocks(P)).coeffs - stokes_apply(v).apply_blocks(P).coeffs).max())
    return {k: float(x) for k, x in r.items()}


def c_of_q_residuals(samples: int = 10_000, seed: int = 0) -> dict:
    """Violations of ``x^q + y^q >= c(q)(x+y)^q`` and the equality cases."""
    rng = np.random.default_rng(seed)
    x = 10.0 ** rng.uniform(-3, 3, samples)
    y = 10.0 ** rng.uniform(-3, 3, samples)
    q = rng.uniform(0.0, 4.0, samples)
    q[q == 0] = 4.0
    c = np.array([c_of_q(qq) for qq in q])
    lhs = x**q + y**q
    rhs = c * (x + y) ** q
    violations = int(np.sum(lhs < rhs * (1.0 - 1e-15)))
    qq = q[q > 1]
    xx = x[q > 1]
    cc = c[q > 1]
    eq = np.abs(2 * xx**qq - cc * (2 * xx) ** qq) / (2 * xx**qq)
    return {
        "c_of_q_violations": float(violations),
        "c_of_q_equality": float(eq.max()),
        "c_of_q_five_thirds": abs(c_of_q(5.0 / 3.0) - 0.25 ** (1.0 / 3.0)),
    }


def run_identity_suite(domain: DomainParams, cutoff: int, alpha: float, samples: int,
                       seed: int = 0, identity_tol: float = 1e-12,
                       propagator_tol: float = 1e-12, path_tol: float = 1e-10,
                       nu: float = 1.0) -> IdentityReport:
    """All identities at one ``(domain, cutoff, alpha)``."""
    checks = [Check("lemma_direct", float(lemma_residuals(domain, cutoff, alpha, samples, seed).max()),
                    identity_tol)]
    checks += [Check(k, v, identity_tol)
               for k, v in neutrality_residuals(domain, cutoff, alpha, samples, seed).items()]
    checks += [Check(k, v, identity_tol)
               for k, v in orthogonality_residuals(domain, cutoff, alpha, samples, seed, nu).items()]
    checks.append(Check("catalytic_path_equivalence",
                        catalytic_path_residual(domain, cutoff, alpha, seed), path_tol))
    checks += [Check(k, v, 0.0 if k == "propagator_identity_at_zero" else propagator_tol)
               for k, v in propagator_residuals(domain, cutoff, alpha, seed).items()]
    cq = c_of_q_residuals(seed=seed)
    checks.append(Check("c_of_q_violations", cq["c_of_q_violations"], 0.0))
    checks.append(Check("c_of_q_equality", cq["c_of_q_equality"], 1e-15))
    checks.append(Check("c_of_q_five_thirds", cq["c_of_q_five_thirds"], 0.0))
    return IdentityReport(tuple(checks))

"""Time integration of the rotating alpha system, its envelope form and the catalytic limit.

All systems are advanced with a Lawson (integrating-factor) fourth-order
Runge-Kutta scheme.  The linear part is solved exactly per mode:
``exp(-nu |n|^2 h) E(-Omega h)`` for the full system and ``exp(-nu |n|^2 h)``
for the envelope and catalytic systems.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .field import (SpectralField, baroclinic_part, barotropic_part, divergence_residual,
                    inner_product)
from .lattice import DomainParams, lattice
from .nonlinear import B_I, alpha_product, bilinear_alpha, catalytic_form
from .poincare import _oscillating_batch, _propagate

__all__ = [
    "ForcingMode",
    "SolverConfig",
    "DiagnosticsRow",
    "BlowUpError",
    "RankLossError",
    "forcing_field",
    "step_rns_alpha",
    "step_envelope",
    "step_resonant_limit",
    "averaged_forcing",
    "diagnostics",
    "SimulationResult",
    "simulate",
    "alpha_zero_comparison",
    "TraceResult",
    "variational_trace",
    "write_diagnostics_csv",
]

SCHEMES = ("lawson-rk4",)


class BlowUpError(FloatingPointError):
    def __init__(self, t: float, what: str = "state"):
        super().__init__(f"non-finite {what} at t={t:.6g}")
        self.t = t
        self.partial = None  # SimulationResult up to the last good checkpoint, if known


class RankLossError(np.linalg.LinAlgError):
    """Tangent vectors became linearly dependent during re-orthonormalisation."""


@dataclass(frozen=True)
class ForcingMode:
    n: tuple
    f: tuple

    def vector(self) -> np.ndarray:
        return np.array([complex(x) for x in self.f])


@dataclass(frozen=True)
class SolverConfig:
    """Physical and numerical parameters of one run.

    ``dealias=True`` evaluates products on the padded transform grid (exact for
    the truncated system); ``False`` uses the direct convolution.
    ``nonlinear=False`` drops the quadratic term, leaving the exact linear flow.
    """

    nu: float
    omega_big: float = 0.0
    alpha: float = 0.0
    cutoff: int = 4
    dt: float = 1e-3
    t_end: float = 1.0
    domain: DomainParams = field(default_factory=DomainParams)
    forcing: tuple = ()
    scheme: str = "lawson-rk4"
    dealias: bool = True
    seed: int = 0
    checkpoint_every: int = 10
    nonlinear: bool = True

    def __post_init__(self):
        if self.nu < 0:
            raise ValueError(f"nu must be >= 0, got {self.nu}")
        if self.omega_big < 0:
            raise ValueError(f"omega_big must be >= 0, got {self.omega_big}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.cutoff < 1:
            raise ValueError(f"cutoff must be >= 1, got {self.cutoff}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_end < 0:
            raise ValueError(f"t_end must be >= 0, got {self.t_end}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if self.checkpoint_every < 1:
            raise ValueError("checkpoint_every must be >= 1")

    @property
    def steps(self) -> int:
        n = round(self.t_end / self.dt)
        if abs(n * self.dt - self.t_end) > 1e-9 * max(1.0, self.t_end):
            raise ValueError(f"t_end={self.t_end} is not a multiple of dt={self.dt}")
        return n

    @property
    def stiffness(self) -> float:
        """``dt nu max|n|^2``; the integrating factor keeps any value stable."""
        return self.dt * self.nu * float(lattice(self.domain, self.cutoff).norm_sq.max())

    @property
    def path(self) -> str:
        return "fft" if self.dealias else "direct"


def forcing_field(cfg: SolverConfig) -> SpectralField:
    """Real divergence-free forcing from the listed modes (conjugates are implied)."""
    lat = lattice(cfg.domain, cfg.cutoff)
    c = np.zeros((3,) + lat.shape, dtype=complex)
    for fm in cfg.forcing:
        n = tuple(int(x) for x in fm.n)
        if n == (0, 0, 0):
            raise ValueError("forcing on the zero mode is not allowed")
        if not lat.contains(n):
            raise ValueError(f"forcing mode {n} is outside cutoff {cfg.cutoff}")
        vec = fm.vector()
        chk = lat.check[(slice(None),) + lat.index(n)]
        if abs(chk @ vec) > 1e-12 * np.linalg.norm(chk) * max(np.linalg.norm(vec), 1e-300):
            raise ValueError(f"forcing mode {n} is not divergence free; project it with "
                             f"f - (n.f) n / |n|^2")
        neg = tuple(-x for x in n)
        c[(slice(None),) + lat.index(n)] += vec
        c[(slice(None),) + lat.index(neg)] += vec.conj()
    return SpectralField(cfg.domain, cfg.cutoff, c)


# --------------------------------------------------------------------------
# Lawson RK4


def _lawson(u, t, h, phi, rhs):
    """One Lawson RK4 step; ``phi(h, x)`` applies the exact linear flow."""
    k1 = rhs(t, u)
    k2 = rhs(t + h / 2, phi(h / 2, u + (h / 2) * k1))
    k3 = rhs(t + h / 2, phi(h / 2, u) + (h / 2) * k2)
    k4 = rhs(t + h, phi(h, u) + h * phi(h / 2, k3))
    return phi(h, u + (h / 6) * k1) + (h / 6) * (2 * phi(h / 2, k2 + k3) + k4)


def _viscous(lat, nu):
    nsq = lat.norm_sq

    def phi(h, x):
        return x * np.exp(-nu * h * nsq)
    return phi


def _rotating_viscous(lat, nu, omega_big, alpha):
    nsq = lat.norm_sq

    def phi(h, x):
        return _propagate(x, lat, alpha, -omega_big * h) * np.exp(-nu * h * nsq)
    return phi


def _check_finite(x, t):
    if not np.all(np.isfinite(x)):
        raise BlowUpError(t)


def _rns_rhs(cfg, lat, f):
    def rhs(t, c):
        out = f.copy()
        if cfg.nonlinear:
            if cfg.dealias:
                out -= alpha_product(c, c, cfg.alpha, lat)
            else:
                v = SpectralField(cfg.domain, cfg.cutoff, c)
                out -= bilinear_alpha(v, v, cfg.alpha, path="direct").coeffs
        return out
    return rhs


def step_rns_alpha(state: SpectralField, cfg: SolverConfig, t: float = 0.0,
                   f: Optional[SpectralField] = None) -> SpectralField:
    """One step of ``dv/dt + Omega M_alpha v + nu A v + B_alpha(v, v) = f``."""
    lat = state.lattice
    f = forcing_field(cfg) if f is None else f
    out = _lawson(state.coeffs, t, cfg.dt, _rotating_viscous(lat, cfg.nu, cfg.omega_big, cfg.alpha),
                  _rns_rhs(cfg, lat, f.coeffs))
    _check_finite(out, t + cfg.dt)
    return state.with_coeffs(out)


def _envelope_rhs(cfg, lat, f):
    def rhs(t, c):
        tau = cfg.omega_big * t
        out = _propagate(f, lat, cfg.alpha, tau)
        if cfg.nonlinear:
            out = out + _oscillating_batch(c, lat, cfg.alpha, np.array([tau]))[:, 0]
        return out
    return rhs


def step_envelope(state: SpectralField, cfg: SolverConfig, t: float = 0.0,
                  f: Optional[SpectralField] = None) -> SpectralField:
    """One step of ``dV/dt + nu A V = -E(Omega t) B_alpha(E(-Omega t) V, .) + E(Omega t) f``."""
    lat = state.lattice
    f = forcing_field(cfg) if f is None else f
    out = _lawson(state.coeffs, t, cfg.dt, _viscous(lat, cfg.nu), _envelope_rhs(cfg, lat, f.coeffs))
    _check_finite(out, t + cfg.dt)
    return state.with_coeffs(out)


def _catalytic(cfg, triads):
    path = "physical" if triads is None else "resonant"

    def form(a: SpectralField, b: SpectralField) -> SpectralField:
        return catalytic_form(a, b, cfg.alpha, path=path, triads=triads)
    return form


def _limit_rhs(cfg, f, triads):
    form = _catalytic(cfg, triads)

    def rhs(t, c):
        if not cfg.nonlinear:
            return f
        w = SpectralField(cfg.domain, cfg.cutoff, c)
        return f - form(w, w).coeffs
    return rhs


def averaged_forcing(f: SpectralField, alpha: float, omega_big: float) -> SpectralField:
    """Zero-frequency part of ``f``: its barotropic part when ``Omega > 0``, ``f`` itself otherwise."""
    if omega_big == 0:
        return f
    return barotropic_part(f)


def step_resonant_limit(state: SpectralField, cfg: SolverConfig, triads=None, t: float = 0.0,
                        f: Optional[SpectralField] = None) -> SpectralField:
    """One step of ``dw/dt + nu A w + B_c(w, w) = f~``.

    With a triad set the catalytic operator is evaluated as a resonant sum,
    otherwise from its physical-space form.
    """
    lat = state.lattice
    if f is None:
        f = averaged_forcing(forcing_field(cfg), cfg.alpha, cfg.omega_big)
    out = _lawson(state.coeffs, t, cfg.dt, _viscous(lat, cfg.nu),
                  _limit_rhs(cfg, f.coeffs, triads))
    _check_finite(out, t + cfg.dt)
    return state.with_coeffs(out)


# --------------------------------------------------------------------------
# driver


@dataclass(frozen=True)
class DiagnosticsRow:
    t: float
    l2_energy: float
    alpha_energy: float
    enstrophy: float
    divergence_residual: float
    barotropic_fraction: float

    FIELDS = ("t", "l2_energy", "alpha_energy", "enstrophy", "divergence_residual",
              "barotropic_fraction")


def diagnostics(v: SpectralField, alpha: float, t: float) -> DiagnosticsRow:
    lat = v.lattice
    e = float(np.sum(np.abs(v.coeffs) ** 2))
    ae = float(np.sum(np.abs(v.coeffs) ** 2 * lat.helmholtz(alpha)))
    ens = float(np.sum(np.abs(v.coeffs) ** 2 * lat.norm_sq))
    eb = float(np.sum(np.abs(v.coeffs[..., lat.cutoff]) ** 2))
    return DiagnosticsRow(t, e, ae, ens, divergence_residual(v), eb / e if e > 0 else 0.0)


@dataclass
class SimulationResult:
    final: SpectralField
    rows: list
    checkpoints: list

    def states(self) -> list:
        return [s for _, s in self.checkpoints]


def simulate(cfg: SolverConfig, v0: SpectralField, system: str = "rns", triads=None,
             keep_states: bool = False) -> SimulationResult:
    """Integrate ``system`` in ``{"rns", "envelope", "limit"}`` to ``cfg.t_end``.

    Diagnostics (and optionally states) are recorded every
    ``cfg.checkpoint_every`` steps and at the final time.
    """
    f = forcing_field(cfg)
    if system == "rns":
        def step(v, t):
            return step_rns_alpha(v, cfg, t, f)
    elif system == "envelope":
        def step(v, t):
            return step_envelope(v, cfg, t, f)
    elif system == "limit":
        fa = averaged_forcing(f, cfg.alpha, cfg.omega_big)

        def step(v, t):
            return step_resonant_limit(v, cfg, triads, t, fa)
    else:
        raise ValueError(f"unknown system {system!r}")
    n = cfg.steps
    v = v0
    rows = [diagnostics(v, cfg.alpha, 0.0)]
    cps = [(0.0, v)] if keep_states else []
    for i in range(1, n + 1):
        t = (i - 1) * cfg.dt
        try:
            v = step(v, t)
        except BlowUpError as exc:
            exc.partial = SimulationResult(v, rows, cps)
            raise
        if i % cfg.checkpoint_every == 0 or i == n:
            rows.append(diagnostics(v, cfg.alpha, i * cfg.dt))
            if keep_states:
                cps.append((i * cfg.dt, v))
    return SimulationResult(v, rows, cps)


def write_diagnostics_csv(path, rows: Sequence[DiagnosticsRow],
                          header_lines: Sequence[str] = ()) -> None:
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(DiagnosticsRow.FIELDS)
        for r in rows:
            w.writerow([repr(getattr(r, k)) for k in DiagnosticsRow.FIELDS])


@dataclass(frozen=True)
class ComparisonRow:
    alpha: float
    sup_distance: float
    final_distance: float


def alpha_zero_comparison(cfg0: SolverConfig, alphas: Sequence[float],
                          v0: SpectralField) -> list[ComparisonRow]:
    """Sup over checkpoints of ``|v_alpha(t) - v_0(t)|`` for each ``alpha``."""
    ref = simulate(replace(cfg0, alpha=0.0), v0, keep_states=True).states()
    rows = []
    for a in alphas:
        states = ref if a == 0 else simulate(replace(cfg0, alpha=float(a)), v0,
                                             keep_states=True).states()
        d = [math.sqrt(float(np.sum(np.abs(x.coeffs - y.coeffs) ** 2)))
             for x, y in zip(states, ref)]
        rows.append(ComparisonRow(float(a), max(d), d[-1]))
    return rows


# --------------------------------------------------------------------------
# variational equation


def _mgs(vecs: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Modified Gram-Schmidt on rows of ``vecs`` under ``Re sum conj(a) b``."""
    out = vecs.copy()
    for i in range(out.shape[0]):
        for j in range(i):
            out[i] -= np.vdot(out[j], out[i]).real * out[j]
        nrm = math.sqrt(float(np.vdot(out[i], out[i]).real))
        ref = math.sqrt(float(np.vdot(vecs[i], vecs[i]).real))
        if nrm <= tol * max(ref, 1e-300):
            raise RankLossError(f"tangent vector {i} collapsed (norm {nrm:.3e})")
        out[i] /= nrm
    return out


def _orthonormal_basis(vecs: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of the real span of ``vecs`` (rows), dropping dependent rows."""
    basis = []
    scale = max((math.sqrt(float(np.vdot(v, v).real)) for v in vecs), default=0.0)
    for v in vecs:
        x = v.copy()
        for _ in range(2):
            for b in basis:
                x -= np.vdot(b, x).real * b
        nrm = math.sqrt(float(np.vdot(x, x).real))
        if nrm > tol * max(scale, 1e-300):
            basis.append(x / nrm)
    return np.array(basis) if basis else np.zeros((0,) + vecs.shape[1:], dtype=complex)


@dataclass
class TraceResult:
    """Traces of the linearised catalytic flow along a trajectory.

    ``full`` is ``sum <L phi_i, phi_i>`` on the Gram-Schmidt frame; ``split_full``
    and ``split_reduced`` use an orthonormal frame of the barotropic and
    baroclinic parts of the tangent space, where the reduced formula keeps the
    barotropic block and the baroclinic viscous term only.
    """

    times: np.ndarray
    full: np.ndarray
    split_full: np.ndarray
    split_reduced: np.ndarray
    split_dim: np.ndarray

    @property
    def q(self) -> np.ndarray:
        """Running time average of ``full``."""
        return np.cumsum(self.full) / np.arange(1, self.full.size + 1)

    @property
    def mean(self) -> float:
        return float(self.full.mean())


def linearized_apply(w: SpectralField, phi: SpectralField, cfg: SolverConfig,
                     triads=None) -> SpectralField:
    """``L_c(w) phi = -nu A phi - B_c(w, phi) - B_c(phi, w)``."""
    form = _catalytic(cfg, triads)
    lin = phi.scale_modes(-cfg.nu * phi.lattice.norm_sq)
    if cfg.nonlinear:
        lin = lin - form(w, phi) - form(phi, w)
    return lin


def frame_traces(w: SpectralField, frame: np.ndarray, cfg: SolverConfig, triads=None):
    """``(full, split_full, split_reduced, split_dim)`` for one orthonormal frame."""
    d, n = cfg.domain, cfg.cutoff

    def fld(c):
        return SpectralField(d, n, c)

    full = sum(inner_product(linearized_apply(w, fld(p), cfg, triads), fld(p)) for p in frame)
    bar = np.array([barotropic_part(fld(p)).coeffs for p in frame])
    per = np.array([baroclinic_part(fld(p)).coeffs for p in frame])
    split = np.concatenate([_orthonormal_basis(bar), _orthonormal_basis(per)])
    sfull = 0.0
    sred = 0.0
    wbar = barotropic_part(w)
    lat = lattice(d, n)
    for p in split:
        phi = fld(p)
        sfull += inner_product(linearized_apply(w, phi, cfg, triads), phi)
        pb, pp = barotropic_part(phi), baroclinic_part(phi)
        blk = pb.scale_modes(cfg.nu * lat.norm_sq)
        if cfg.nonlinear:
            blk = blk + B_I(wbar, pb, cfg.alpha) + B_I(pb, wbar, cfg.alpha)
        sred -= inner_product(blk, pb) + cfg.nu * inner_product(pp.scale_modes(lat.norm_sq), pp)
    return full, sfull, sred, len(split)


def variational_trace(w0: SpectralField, cfg: SolverConfig, N: int, triads=None,
                      xi: Optional[np.ndarray] = None, every: int = 1) -> TraceResult:
    """Advance ``w`` and ``N`` tangent vectors of the catalytic system together.

    The tangent frame is re-orthonormalised by modified Gram-Schmidt after
    every step; traces are recorded every ``every`` steps.
    """
    lat = w0.lattice
    size = 3 * lat.side**3
    if N < 1 or N > 2 * (lat.side**3 - 1):
        raise ValueError(f"N={N} outside [1, mode count]")
    if xi is None:
        from .field import random_field
        xi = np.array([random_field(cfg.domain, cfg.cutoff, seed=cfg.seed + 1 + i).coeffs
                       for i in range(N)])
    frame = _mgs(xi.reshape(N, size)).reshape((N,) + w0.coeffs.shape)
    fa = averaged_forcing(forcing_field(cfg), cfg.alpha, cfg.omega_big).coeffs
    form = _catalytic(cfg, triads)
    d, n = cfg.domain, cfg.cutoff
    phi_lin = _viscous(lat, cfg.nu)

    def rhs(t, state):
        w = SpectralField(d, n, state[0])
        out = np.empty_like(state)
        out[0] = fa - (form(w, w).coeffs if cfg.nonlinear else 0.0)
        for i in range(1, state.shape[0]):
            p = SpectralField(d, n, state[i])
            out[i] = 0.0 if not cfg.nonlinear else -(form(w, p) + form(p, w)).coeffs
        return out

    state = np.concatenate([w0.coeffs[None], frame])
    times, full, sf, sr, sd = [], [], [], [], []
    for i in range(1, cfg.steps + 1):
        t = (i - 1) * cfg.dt
        state = _lawson(state, t, cfg.dt, phi_lin, rhs)
        _check_finite(state, t + cfg.dt)
        state[1:] = _mgs(state[1:].reshape(N, size)).reshape(state[1:].shape)
        if i % every == 0:
            w = SpectralField(d, n, state[0])
            tr = frame_traces(w, state[1:], cfg, triads)
            times.append(i * cfg.dt)
            full.append(tr[0])
            sf.append(tr[1])
            sr.append(tr[2])
            sd.append(tr[3])
    return TraceResult(np.array(times), np.array(full), np.array(sf), np.array(sr),
                       np.array(sd))

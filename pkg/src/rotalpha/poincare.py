"""Poincaré propagator, the slow envelope equation and resonant averaging.

``E(tau) = exp(tau M_alpha)`` acts on mode ``n`` as
``cos(omega tau) I + sin(omega tau) R_n / |check n|``.  On the helical
component ``Pi^s`` (see :func:`rotalpha.lattice.helical_projectors`) it is the
scalar ``exp(i s omega tau)``, so a triad contribution to
``E(Omega t) B(E(-Omega t) V, E(-Omega t) V)`` carries the phase
``exp(i Omega t (s_n omega_n - s_k omega_k - s_m omega_m))``.  The resonant
operator keeps the sign combinations whose phase vanishes.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .field import SpectralField
from .lattice import (DomainError, Lattice, ModeMatrix, WaveVector, curl_matrix, dispersion,
                      dispersion_extended, helical_projectors)
from .nonlinear import _cross, alpha_product

__all__ = [
    "PropagatorParams",
    "StaleTriadSet",
    "propagator_mode",
    "propagator_blocks",
    "apply_propagator",
    "oscillating_bilinear",
    "resonant_form",
    "resonant_bilinear",
    "time_average",
    "AverageRow",
    "fast_average_experiment",
    "propagated_average",
    "write_decay_csv",
]


class StaleTriadSet(ValueError):
    """Triad set enumerated for a different domain, ``alpha`` or cutoff."""


@dataclass(frozen=True)
class PropagatorParams:
    omega_big: float
    alpha: float
    t: float

    def __post_init__(self):
        if not self.omega_big >= 0:
            raise ValueError(f"omega_big must be >= 0, got {self.omega_big}")
        if not math.isfinite(self.t):
            raise ValueError("t must be finite")
        if self.alpha < 0:
            raise ValueError(f"alpha must be non-negative, got {self.alpha}")

    @property
    def tau(self) -> float:
        return self.omega_big * self.t


def propagator_mode(n: WaveVector, params: PropagatorParams) -> ModeMatrix:
    if n.is_zero():
        raise DomainError("the propagator is not defined on the zero mode")
    ph = dispersion(n, params.alpha) * params.tau
    k = curl_matrix(n).entries / n.norm
    return ModeMatrix(math.cos(ph) * np.eye(3) + math.sin(ph) * k, "propagator")


def propagator_blocks(lat: Lattice, alpha: float, tau: float) -> np.ndarray:
    """All ``E(tau)_n`` as a ``(3, 3, L, L, L)`` array (identity at the origin)."""
    inv = np.zeros(lat.shape)
    np.divide(1.0, lat.norm, out=inv, where=lat.nonzero)
    k = lat.check * inv[None]
    z = np.zeros(lat.shape)
    kmat = np.array([[z, -k[2], k[1]], [k[2], z, -k[0]], [-k[1], k[0], z]])
    ph = tau * lat.dispersion(alpha)
    return np.cos(ph) * np.eye(3).reshape(3, 3, 1, 1, 1) + np.sin(ph) * kmat


def _propagate(c: np.ndarray, lat: Lattice, alpha: float, tau) -> np.ndarray:
    """``E(tau) c`` for ``c`` of shape ``(3, L, L, L)``; array ``tau`` adds a batch axis."""
    inv = np.zeros(lat.shape)
    np.divide(1.0, lat.norm, out=inv, where=lat.nonzero)
    kc = _cross(lat.check, c) * inv[None]
    tau = np.asarray(tau, dtype=float)
    ph = np.multiply.outer(tau, lat.dispersion(alpha))
    if tau.ndim == 0:
        return np.cos(ph)[None] * c + np.sin(ph)[None] * kc
    return np.cos(ph)[None] * c[:, None] + np.sin(ph)[None] * kc[:, None]


def _propagate_batch(c: np.ndarray, lat: Lattice, alpha: float, tau: np.ndarray) -> np.ndarray:
    """``E(tau_b) c_b`` for ``c`` of shape ``(3, B, L, L, L)``."""
    inv = np.zeros(lat.shape)
    np.divide(1.0, lat.norm, out=inv, where=lat.nonzero)
    kc = _cross(lat.check[:, None], c) * inv
    ph = np.multiply.outer(tau, lat.dispersion(alpha))
    return np.cos(ph)[None] * c + np.sin(ph)[None] * kc


def apply_propagator(v: SpectralField, params: PropagatorParams) -> SpectralField:
    """``E_alpha(Omega t) v`` mode by mode."""
    return v.with_coeffs(_propagate(v.coeffs, v.lattice, params.alpha, params.tau))


def _oscillating_batch(c: np.ndarray, lat: Lattice, alpha: float, taus: np.ndarray) -> np.ndarray:
    w = _propagate(c, lat, alpha, -taus)
    return -_propagate_batch(alpha_product(w, w, alpha, lat), lat, alpha, taus)


def oscillating_bilinear(V: SpectralField, params: PropagatorParams) -> SpectralField:
    """``-E(Omega t) B_alpha(E(-Omega t) V, E(-Omega t) V)``, the envelope nonlinearity."""
    lat = V.lattice
    out = _oscillating_batch(V.coeffs, lat, params.alpha, np.array([params.tau]))
    return V.with_coeffs(out[:, 0])


# --------------------------------------------------------------------------
# resonant operator


def _helical_split(c: np.ndarray, hp: np.ndarray, baro: np.ndarray) -> np.ndarray:
    """``(2, 3, size)`` helical components; barotropic modes keep the whole vector in slot 0."""
    comp = np.einsum("sij...,j...->si...", hp, c)
    comp[0][:, baro] = c[:, baro]
    comp[1][:, baro] = 0.0
    return comp.reshape(2, 3, -1)


def resonant_form(a: SpectralField, b: SpectralField, alpha: float, triads,
                  classes: Optional[Iterable[str]] = None) -> SpectralField:
    """Time average of ``-E B_alpha(E^-1 a, E^-1 b)`` restricted to resonant triads.

    Per mode ``n`` this is ``i sum r_k Pi_n^{s_n}[Pi_k^{s_k} a_k x (check m x Pi_m^{s_m} b_m)]``
    over triads of ``triads`` (optionally only the listed classes) and sign
    combinations whose phase ``s_n w_n - s_k w_k - s_m w_m`` is within the
    triad-set tolerance.  Modes with ``w = 0`` use the Leray projector instead
    of a helical pair.
    """
    if not a.same_lattice(b):
        a._check(b)
    if not triads.matches(a.domain, alpha, a.cutoff):
        raise StaleTriadSet(
            f"triad set is for domain={triads.domain}, alpha={triads.alpha}, "
            f"cutoff={triads.cutoff}; field needs domain={a.domain}, alpha={alpha}, "
            f"cutoff={a.cutoff}")
    lat = a.lattice
    size = lat.side**3
    hp = helical_projectors(lat)
    baro = lat.barotropic_mask
    ac = _helical_split(a.coeffs, hp, baro)
    bc = _helical_split(b.coeffs, hp, baro)
    proj = hp.copy()
    proj[0][..., baro] = hp[0][..., baro] + hp[1][..., baro]
    proj[1][..., baro] = 0.0
    proj = proj.reshape(2, 3, 3, size)
    omega = dispersion_extended(lat, alpha).ravel()
    chk = lat.check.reshape(3, size)
    rf = lat.helmholtz(alpha).ravel()
    kf, mf, nf = triads.flat_indices(classes)
    sgn = (1, -1)
    acc = np.zeros((2, 3, size), dtype=complex)
    for sk in range(2):
        for sm in range(2):
            term = 1j * rf[kf] * _cross(np.take(ac[sk], kf, axis=1),
                                        _cross(np.take(chk, mf, axis=1), np.take(bc[sm], mf, axis=1)))
            base = -sgn[sk] * omega[kf] - sgn[sm] * omega[mf]
            for sn in range(2):
                keep = np.abs(base + sgn[sn] * omega[nf]) <= triads.tolerance
                idx = nf[keep]
                for i in range(3):
                    t = term[i, keep]
                    acc[sn, i] += (np.bincount(idx, weights=t.real, minlength=size)
                                   + 1j * np.bincount(idx, weights=t.imag, minlength=size))
    out = np.einsum("sij...,sj...->i...", proj, acc)
    return a.with_coeffs(out.reshape(a.coeffs.shape))


def resonant_bilinear(V: SpectralField, alpha: float, triads) -> SpectralField:
    """The resonant envelope nonlinearity ``B~_alpha(V, V)`` (same sign as :func:`oscillating_bilinear`)."""
    return resonant_form(V, V, alpha, triads)


# --------------------------------------------------------------------------
# fast-time averaging


def gauss_panels(T: float, rate_max: float, nodes: int = 8):
    """Composite Gauss-Legendre nodes and weights on ``[0, T]`` for the mean value.

    The panel count makes every period ``2 pi / rate_max`` hold at least
    ``nodes`` nodes.  Weights sum to one.
    """
    panels = max(1, math.ceil(T * rate_max / (2 * math.pi)))
    x, w = np.polynomial.legendre.leggauss(nodes)
    h = T / panels
    left = np.arange(panels)[:, None] * h
    t = (left + 0.5 * h * (x + 1)[None]).ravel()
    wt = np.tile(0.5 * w / panels, panels)
    return t, wt, panels


def time_average(c: np.ndarray, lat: Lattice, alpha: float, omega_big: float, T: float,
                 nodes: int = 8, batch: int = 64):
    """Mean of the envelope nonlinearity of ``c`` over ``t in [0, T]``."""
    rate = omega_big * 3.0 * float(np.abs(lat.dispersion(alpha)).max())
    t, wt, panels = gauss_panels(T, rate, nodes)
    mean = np.zeros(c.shape, dtype=complex)
    for start in range(0, t.size, batch):
        taus = omega_big * t[start:start + batch]
        vals = _oscillating_batch(c, lat, alpha, taus)
        mean += np.tensordot(vals, wt[start:start + batch], axes=([1], [0]))
    return mean, panels


@dataclass(frozen=True)
class AverageRow:
    omega_big: float
    T: float
    residual_norm: float
    panels: int


def fast_average_experiment(V: SpectralField, alpha: float, omegas: Sequence[float], T: float,
                            triads, nodes: int = 8) -> list[AverageRow]:
    """``|(1/T) int_0^T (B_osc(Omega t) - B~)(V) dt|`` for each ``Omega``."""
    omegas = list(omegas)
    if any(b <= a for a, b in zip(omegas, omegas[1:])):
        raise ValueError("omegas must be strictly increasing")
    res = resonant_bilinear(V, alpha, triads).coeffs
    rows = []
    for om in omegas:
        mean, panels = time_average(V.coeffs, V.lattice, alpha, om, T, nodes)
        r = float(np.sqrt(np.sum(np.abs(mean - res) ** 2)))
        rows.append(AverageRow(float(om), float(T), r, panels))
    return rows


def propagated_average(f: SpectralField, alpha: float, omega_big: float, T: float,
                       nodes: int = 8) -> SpectralField:
    """Quadrature mean of ``E(Omega s) f`` over ``s in [0, T]``."""
    lat = f.lattice
    rate = omega_big * float(np.abs(lat.dispersion(alpha)).max())
    t, wt, _ = gauss_panels(T, rate, nodes)
    vals = _propagate(f.coeffs, lat, alpha, omega_big * t)
    return f.with_coeffs(np.tensordot(vals, wt, axes=([1], [0])))


def write_decay_csv(path, rows: Sequence[AverageRow], header_lines: Sequence[str] = ()) -> None:
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["omega", "T", "residual_norm", "panels"])
        for r in rows:
            w.writerow([repr(r.omega_big), repr(r.T), repr(r.residual_norm), r.panels])

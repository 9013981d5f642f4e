"""Resonant wave triads of the rotating problem.

A triad ``(k, m, n)`` with ``n = k + m`` is resonant when some sign
combination ``D_l = +-omega_k +- omega_m +- omega_n`` vanishes.  Frequencies
are evaluated in ``np.longdouble``; norm equalities used by the two-wave cones
are decided with exact rationals whenever the box has rational ``a_j^2``.

Sign index convention: ``l - 1`` read as three bits ``(b_k, b_m, b_n)``, bit
set means a minus sign, so ``l = 1`` is ``omega_k + omega_m + omega_n``.
Stored triads carry the smallest such ``l`` attaining ``min_l |D_l|``.
"""
from __future__ import annotations

import csv
import functools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .lattice import (DomainParams, WaveVector, dispersion_extended, lattice, norm_classes,
                      pair_indices, rational_thetas, norm_sq_exact, wavevector)

__all__ = [
    "CLASSES",
    "ClassificationError",
    "ResonantTriad",
    "ResonantTriadSet",
    "enumerate_resonances",
    "classify_triad",
    "DivisorHistogram",
    "small_divisor_histogram",
    "generic_domain_search",
    "kstar_count",
    "uniform_box_sampler",
    "MAX_DIRECT_CUTOFF",
]

CLASSES = ("K2D", "K14", "K24", "K34", "KSTAR")
MAX_DIRECT_CUTOFF = 24

# sign patterns (s_k, s_m, s_n) indexed by l - 1
SIGNS = np.array([[1 - 2 * ((l >> 2) & 1), 1 - 2 * ((l >> 1) & 1), 1 - 2 * (l & 1)]
                  for l in range(8)])


class ClassificationError(RuntimeError):
    """A resonant triad fits none of the class predicates."""


@dataclass(frozen=True)
class ResonantTriad:
    k: WaveVector
    m: WaveVector
    n: WaveVector
    signs: int
    divisor: float
    cls: str


@dataclass(frozen=True, eq=False)
class ResonantTriadSet:
    """Resonant triads of one lattice, stored as integer arrays.

    ``k``, ``m``, ``n`` have shape ``(T, 3)``; ``cls`` holds indices into
    ``CLASSES``.  Membership in ``KSTAR`` at irrational boxes is decided by
    ``tolerance`` and means "empty at (cutoff, tolerance)" only.
    """

    domain: DomainParams
    alpha: float
    cutoff: int
    tolerance: float
    k: np.ndarray = field(repr=False)
    m: np.ndarray = field(repr=False)
    n: np.ndarray = field(repr=False)
    signs: np.ndarray = field(repr=False)
    divisor: np.ndarray = field(repr=False)
    cls: np.ndarray = field(repr=False)
    exact_norms: bool = True

    def __post_init__(self):
        for name in ("k", "m", "n", "signs", "divisor", "cls"):
            getattr(self, name).setflags(write=False)

    def __len__(self) -> int:
        return len(self.cls)

    @property
    def counts(self) -> dict:
        c = np.bincount(self.cls, minlength=len(CLASSES))
        return {name: int(c[i]) for i, name in enumerate(CLASSES)}

    def select(self, classes: Optional[Iterable[str]] = None) -> np.ndarray:
        if classes is None:
            return np.ones(len(self), dtype=bool)
        ids = [CLASSES.index(c) for c in classes]
        return np.isin(self.cls, ids)

    def flat_indices(self, classes: Optional[Iterable[str]] = None):
        """Flat cube indices of ``(k, m, n)`` for the selected classes."""
        sel = self.select(classes)
        side = 2 * self.cutoff + 1

        def flat(v):
            v = v[sel] + self.cutoff
            return (v[:, 0] * side + v[:, 1]) * side + v[:, 2]

        return flat(self.k), flat(self.m), flat(self.n)

    def triad(self, i: int) -> ResonantTriad:
        return ResonantTriad(wavevector(self.k[i], self.domain), wavevector(self.m[i], self.domain),
                             wavevector(self.n[i], self.domain), int(self.signs[i]),
                             float(self.divisor[i]), CLASSES[self.cls[i]])

    def __iter__(self):
        return (self.triad(i) for i in range(len(self)))

    def as_tuples(self) -> list:
        """``((k), (m), (n), class)`` tuples in canonical order."""
        return [(tuple(map(int, a)), tuple(map(int, b)), tuple(map(int, c)), CLASSES[t])
                for a, b, c, t in zip(self.k, self.m, self.n, self.cls)]

    def matches(self, domain: DomainParams, alpha: float, cutoff: int) -> bool:
        return (self.domain == domain and self.alpha == alpha and self.cutoff == cutoff)

    def to_csv(self, path, header_lines: Sequence[str] = ()) -> None:
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            fh.write(f"# tolerance={self.tolerance!r} exact_norms={self.exact_norms}\n")
            w = csv.writer(fh)
            w.writerow(["k1", "k2", "k3", "m1", "m2", "m3", "n1", "n2", "n3",
                        "class", "min_divisor", "signs"])
            for i in range(len(self)):
                w.writerow([*map(int, self.k[i]), *map(int, self.m[i]), *map(int, self.n[i]),
                            CLASSES[self.cls[i]], repr(float(self.divisor[i])),
                            int(self.signs[i])])


def _min_divisor(wk, wm, wn):
    """``min_l |D_l|`` and the first ``l`` attaining it (only ``l <= 4`` needed)."""
    cand = np.stack([np.abs(wk + wm + wn), np.abs(wk + wm - wn),
                     np.abs(wk - wm + wn), np.abs(wk - wm - wn)])
    arg = np.argmin(cand, axis=0)
    return np.take_along_axis(cand, arg[None], 0)[0], arg + 1


def _classify_arrays(kv, mv, nv, nck, ncm, ncn) -> np.ndarray:
    """Vectorised class predicates; ``-1`` where none applies."""
    k3, m3, n3 = kv[:, 2], mv[:, 2], nv[:, 2]
    out = np.full(len(k3), -1, dtype=np.int8)
    out[(k3 == 0) & (m3 == 0) & (n3 == 0)] = 0
    out[(n3 == 0) & (k3 == -m3) & (k3 != 0) & (nck == ncm)] = 1
    out[(k3 == 0) & (m3 == n3) & (m3 != 0) & (ncm == ncn)] = 2
    out[(m3 == 0) & (k3 == n3) & (k3 != 0) & (nck == ncn)] = 3
    out[(k3 != 0) & (m3 != 0) & (n3 != 0)] = 4
    return out


def _unravel(flat, cutoff):
    side = 2 * cutoff + 1
    return np.stack(np.unravel_index(flat, (side,) * 3), axis=1).astype(np.int64) - cutoff


def _scan_slab(cutoff, k1, omega, nonzero, ncls, tol, keep_all=False):
    kf, mf, nf = pair_indices(cutoff, k1)
    ok = nonzero[kf] & nonzero[mf] & nonzero[nf]
    kf, mf, nf = kf[ok], mf[ok], nf[ok]
    order = np.lexsort((mf, kf))
    kf, mf, nf = kf[order], mf[order], nf[order]
    dmin, l = _min_divisor(omega[kf], omega[mf], omega[nf])
    if keep_all:
        return dmin
    res = dmin <= tol
    kf, mf, nf, dmin, l = kf[res], mf[res], nf[res], dmin[res], l[res]
    kv, mv, nv = _unravel(kf, cutoff), _unravel(mf, cutoff), _unravel(nf, cutoff)
    cls = _classify_arrays(kv, mv, nv, ncls[kf], ncls[mf], ncls[nf])
    if np.any(cls < 0):
        i = int(np.argmax(cls < 0))
        raise ClassificationError(
            f"resonant triad k={tuple(kv[i])} m={tuple(mv[i])} n={tuple(nv[i])} "
            f"(|D|={float(dmin[i]):.3e}) matches no class; tolerance {tol:g} is too loose")
    return kv, mv, nv, l.astype(np.int8), dmin.astype(np.float64), cls


def _prepare(domain, alpha, cutoff):
    lat = lattice(domain, cutoff)
    omega = dispersion_extended(lat, alpha).ravel()
    nonzero = lat.nonzero.ravel()
    ncls = norm_classes(lat).ravel()
    return lat, omega, nonzero, ncls


def _check_cutoff(cutoff, force):
    if cutoff < 1:
        raise ValueError(f"cutoff must be >= 1, got {cutoff}")
    if cutoff > MAX_DIRECT_CUTOFF and not force:
        raise ValueError(f"cutoff {cutoff} exceeds the direct-scan guard "
                         f"{MAX_DIRECT_CUTOFF}; pass force=True to run anyway")


def enumerate_resonances(domain: DomainParams, alpha: float, cutoff: int, tol: float = 1e-9,
                         force: bool = False, threads: int = 1) -> ResonantTriadSet:
    """Exhaustive scan of all ``(k, m)`` with ``k, m, k + m`` nonzero in the cube."""
    _check_cutoff(cutoff, force)
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    lat, omega, nonzero, ncls = _prepare(domain, alpha, cutoff)
    slabs = range(-cutoff, cutoff + 1)
    work = functools.partial(_scan_slab_k1, cutoff=cutoff, omega=omega, nonzero=nonzero,
                             ncls=ncls, tol=tol)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(work, slabs))
    else:
        parts = [work(k1) for k1 in slabs]
    cat = [np.concatenate([p[i] for p in parts]) for i in range(6)]
    return ResonantTriadSet(domain, float(alpha), cutoff, float(tol), *cat,
                            exact_norms=rational_thetas(domain) is not None)


def _scan_slab_k1(k1, **kw):
    return _scan_slab(k1=k1, **kw)


def classify_triad(k: WaveVector, m: WaveVector, n: WaveVector, domain: DomainParams,
                   alpha: float = 0.0) -> str:
    """Class tag of a triad already known to be resonant.

    Norm equalities are exact when the box has rational ``a_j^2``.
    """
    if tuple(a + b for a, b in zip(k.ints, m.ints)) != n.ints:
        raise ValueError("n must equal k + m")
    th = rational_thetas(domain)
    if th is not None:
        nk, nm, nn = (norm_sq_exact(v.ints, th) for v in (k, m, n))
    else:
        a = np.array(domain.radii, dtype=np.longdouble)
        vals = [((np.array(v.ints, dtype=np.longdouble) / a) ** 2).sum() for v in (k, m, n)]

        def eq(x, y):
            return abs(x - y) <= 1e-12 * max(x, y)

        nk = 0
        nm = 0 if eq(vals[0], vals[1]) else 1
        nn = 0 if eq(vals[0], vals[2]) else (nm if eq(vals[1], vals[2]) else 2)
    kv, mv, nv = (np.array([v.ints]) for v in (k, m, n))
    cls = _classify_arrays(kv, mv, nv, np.array([nk]), np.array([nm]), np.array([nn]))[0]
    if cls < 0:
        raise ClassificationError(f"triad {k.ints}, {m.ints}, {n.ints} matches no class")
    return CLASSES[cls]


@dataclass(frozen=True)
class DivisorHistogram:
    """Counts of ``min_l |D_l|`` over all triads in log-spaced bins.

    ``zero_count`` holds triads at or below ``tol`` (resonant);
    ``min_gap`` is the smallest divisor above ``tol``.
    """

    edges: np.ndarray
    counts: np.ndarray
    zero_count: int
    min_gap: float
    tol: float
    total: int

    def to_csv(self, path, header_lines: Sequence[str] = ()) -> None:
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            fh.write(f"# tol={self.tol!r} zero_count={self.zero_count} "
                     f"min_gap={self.min_gap!r} total={self.total}\n")
            w = csv.writer(fh)
            w.writerow(["bin_lo", "bin_hi", "count"])
            for lo, hi, c in zip(self.edges[:-1], self.edges[1:], self.counts):
                w.writerow([repr(float(lo)), repr(float(hi)), int(c)])


def small_divisor_histogram(domain: DomainParams, alpha: float, cutoff: int, tol: float = 1e-9,
                            bins: int = 40, force: bool = False) -> DivisorHistogram:
    _check_cutoff(cutoff, force)
    lat, omega, nonzero, ncls = _prepare(domain, alpha, cutoff)
    d = np.concatenate([_scan_slab(cutoff, k1, omega, nonzero, ncls, tol, keep_all=True)
                        for k1 in range(-cutoff, cutoff + 1)]).astype(np.float64)
    zero = d <= tol
    rest = d[~zero]
    min_gap = float(rest.min()) if rest.size else float("inf")
    edges = np.logspace(np.log10(tol), np.log10(max(4.0, float(d.max()) * 1.01)), bins + 1)
    counts, _ = np.histogram(rest, bins=edges)
    return DivisorHistogram(edges, counts, int(zero.sum()), min_gap, tol, int(d.size))


def kstar_count(domain: DomainParams, alpha: float, cutoff: int, tol: float) -> int:
    return enumerate_resonances(domain, alpha, cutoff, tol).counts["KSTAR"]


def generic_domain_search(sampler: Callable[[np.random.Generator], tuple], cutoff: int,
                          tol: float = 1e-9, trials: int = 8, seed: int = 0,
                          alpha: float = 0.0, include_control: bool = True) -> list:
    """Sample ``(a2, a3)`` boxes and count strict three-wave resonances.

    Returns ``(a2, a3, kstar_count)`` sorted by count, then by ``(a2, a3)``.
    The resonant box ``(1, 1)`` is appended as a control when requested.
    """
    rng = np.random.default_rng(seed)
    boxes = [tuple(float(x) for x in sampler(rng)) for _ in range(trials)]
    if include_control:
        boxes.append((1.0, 1.0))
    rows = [(a2, a3, kstar_count(DomainParams(a2=a2, a3=a3), alpha, cutoff, tol))
            for a2, a3 in boxes]
    return sorted(rows, key=lambda r: (r[2], r[0], r[1]))


def uniform_box_sampler(lo: float = 0.5, hi: float = 2.0):
    def sample(rng):
        return tuple(rng.uniform(lo, hi, size=2))
    return sample

"""Wavenumber lattice geometry and per-mode operator matrices.

A mode ``n = (n1, n2, n3)`` on the box ``[0, 2 pi a1] x [0, 2 pi a2] x [0, 2 pi a3]``
carries the physical wavevector ``check(n) = (n1/a1, n2/a2, n3/a3)``.  All
per-mode algebra lives here: the Leray projector, the curl matrix, the
Helmholtz filter, the dispersion relation of rotating waves and the Coriolis
block.  Vectorised versions operating on the whole truncated cube are provided
for the field layer.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "DomainError",
    "DomainParams",
    "WaveVector",
    "ModeMatrix",
    "Lattice",
    "J_MATRIX",
    "wavevector",
    "leray_projector",
    "curl_matrix",
    "helmholtz_scalar",
    "dispersion",
    "coriolis_block",
    "lattice",
    "rational_thetas",
    "norm_sq_exact",
    "helical_projectors",
    "norm_classes",
    "dispersion_extended",
    "pair_indices",
]


class DomainError(ValueError):
    """Raised when an operation is evaluated outside its mathematical domain."""


J_MATRIX = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])


@dataclass(frozen=True)
class DomainParams:
    """Box radii; the torus is ``prod_j [0, 2 pi a_j]`` with ``a1 = 1``."""

    a1: float = 1.0
    a2: float = 1.0
    a3: float = 1.0
    a_min: float = 0.1
    a_max: float = 10.0

    def __post_init__(self):
        if self.a1 != 1.0:
            raise DomainError(f"a1 must be exactly 1, got {self.a1!r}")
        if not (0.0 < self.a_min <= self.a_max < math.inf):
            raise DomainError(f"invalid radius bounds [{self.a_min}, {self.a_max}]")
        for name in ("a2", "a3"):
            a = getattr(self, name)
            if not (self.a_min <= a <= self.a_max):
                raise DomainError(f"{name}={a!r} outside [{self.a_min}, {self.a_max}]")

    @property
    def radii(self) -> tuple[float, float, float]:
        return (self.a1, self.a2, self.a3)

    @property
    def theta(self) -> tuple[float, float, float]:
        return tuple(1.0 / (a * a) for a in self.radii)

    @property
    def volume(self) -> float:
        return 8.0 * math.pi**3 * self.a1 * self.a2 * self.a3


@dataclass(frozen=True)
class WaveVector:
    n1: int
    n2: int
    n3: int
    check1: float
    check2: float
    check3: float
    norm: float

    @property
    def ints(self) -> tuple[int, int, int]:
        return (self.n1, self.n2, self.n3)

    @property
    def check(self) -> np.ndarray:
        return np.array([self.check1, self.check2, self.check3])

    @property
    def norm_sq(self) -> float:
        return self.norm * self.norm

    def is_zero(self) -> bool:
        return self.n1 == 0 and self.n2 == 0 and self.n3 == 0


@dataclass(frozen=True)
class ModeMatrix:
    entries: np.ndarray
    kind: str

    def __matmul__(self, other):
        if isinstance(other, ModeMatrix):
            return self.entries @ other.entries
        return self.entries @ other


def _norm_sq(ints: Sequence[int], theta: Sequence[float]) -> float:
    # |n|^2 always from the theta sums; one canonical rounding path
    return theta[0] * ints[0] ** 2 + theta[1] * ints[1] ** 2 + theta[2] * ints[2] ** 2


def wavevector(n: Sequence[int], domain: DomainParams) -> WaveVector:
    n1, n2, n3 = (int(c) for c in n)
    a1, a2, a3 = domain.radii
    return WaveVector(n1, n2, n3, n1 / a1, n2 / a2, n3 / a3,
                      math.sqrt(_norm_sq((n1, n2, n3), domain.theta)))


def _require_nonzero(n: WaveVector):
    if n.is_zero():
        raise DomainError("the zero wavevector carries no dynamics")


def leray_projector(n: WaveVector) -> ModeMatrix:
    """``P_n = I - check(n) check(n)^T / |check(n)|^2``."""
    _require_nonzero(n)
    c = n.check
    return ModeMatrix(np.eye(3) - np.outer(c, c) / n.norm_sq, "leray")


def curl_matrix(n: WaveVector) -> ModeMatrix:
    """Real antisymmetric ``R_n`` with ``R_n v = check(n) x v``."""
    c1, c2, c3 = n.check1, n.check2, n.check3
    return ModeMatrix(np.array([[0.0, -c3, c2], [c3, 0.0, -c1], [-c2, c1, 0.0]]), "curl")


def helmholtz_scalar(n: WaveVector, alpha: float) -> float:
    if alpha < 0:
        raise DomainError(f"alpha must be non-negative, got {alpha}")
    return 1.0 / (1.0 + alpha * alpha * n.norm_sq)


def dispersion(n: WaveVector, alpha: float) -> float:
    """Rotating-wave frequency ``check(n)_3 / ((1 + alpha^2 |n|^2) |n|)``."""
    _require_nonzero(n)
    return helmholtz_scalar(n, alpha) * n.check3 / n.norm


def coriolis_block(n: WaveVector, alpha: float) -> ModeMatrix:
    """``M_{alpha,n} = P_n J P_n / (1 + alpha^2 |n|^2)``; spectrum ``{0, +-i omega}``."""
    p = leray_projector(n).entries
    return ModeMatrix(helmholtz_scalar(n, alpha) * (p @ J_MATRIX @ p), "coriolis")


# --------------------------------------------------------------------------
# exact arithmetic helpers for resonance classification


def rational_thetas(domain: DomainParams, max_den: int = 10**6,
                    rtol: float = 1e-14) -> Optional[tuple[Fraction, Fraction, Fraction]]:
    """Rational ``theta_j`` if every ``1/a_j^2`` is (numerically) a small-denominator rational.

    Returns ``None`` when some ``theta_j`` is not close to any fraction with
    denominator ``<= max_den``; callers then fall back to extended precision.
    """
    out = []
    for t in domain.theta:
        q = Fraction(t).limit_denominator(max_den)
        if abs(float(q) - t) > rtol * t:
            return None
        out.append(q)
    return tuple(out)


def norm_sq_exact(n: Sequence[int], thetas: Sequence[Fraction]) -> Fraction:
    return sum((th * int(c) ** 2 for th, c in zip(thetas, n)), Fraction(0))


# --------------------------------------------------------------------------
# whole-cube arrays


@dataclass(frozen=True, eq=False)
class Lattice:
    """Integer and physical wavevectors of the cube ``max_j |n_j| <= cutoff``.

    Arrays are indexed ``[..., n1 + N, n2 + N, n3 + N]`` so C order is the
    lexicographic ``(n1, n2, n3)`` order.
    """

    domain: DomainParams
    cutoff: int
    ints: np.ndarray = field(repr=False)
    check: np.ndarray = field(repr=False)
    norm_sq: np.ndarray = field(repr=False)

    @property
    def side(self) -> int:
        return 2 * self.cutoff + 1

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.side,) * 3

    @property
    def origin(self) -> tuple[int, int, int]:
        return (self.cutoff,) * 3

    @functools.cached_property
    def nonzero(self) -> np.ndarray:
        m = np.ones(self.shape, dtype=bool)
        m[self.origin] = False
        return m

    @functools.cached_property
    def inv_norm_sq(self) -> np.ndarray:
        out = np.zeros(self.shape)
        np.divide(1.0, self.norm_sq, out=out, where=self.nonzero)
        return out

    @functools.cached_property
    def norm(self) -> np.ndarray:
        return np.sqrt(self.norm_sq)

    @functools.cached_property
    def barotropic_mask(self) -> np.ndarray:
        return self.ints[2] == 0

    @functools.cached_property
    def lambda1(self) -> float:
        """Smallest nonzero ``|n|^2`` on the lattice (first Stokes eigenvalue)."""
        return float(self.norm_sq[self.nonzero].min())

    def helmholtz(self, alpha: float) -> np.ndarray:
        if alpha < 0:
            raise DomainError(f"alpha must be non-negative, got {alpha}")
        return 1.0 / (1.0 + alpha * alpha * self.norm_sq)

    def dispersion(self, alpha: float) -> np.ndarray:
        out = np.zeros(self.shape)
        np.divide(self.check[2], self.norm, out=out, where=self.nonzero)
        return out * self.helmholtz(alpha)

    def index(self, n: Sequence[int]) -> tuple[int, int, int]:
        return tuple(int(c) + self.cutoff for c in n)

    def contains(self, n: Sequence[int]) -> bool:
        return all(abs(int(c)) <= self.cutoff for c in n)

    def wavevector(self, n: Sequence[int]) -> WaveVector:
        return wavevector(n, self.domain)


@functools.lru_cache(maxsize=32)
def lattice(domain: DomainParams, cutoff: int) -> Lattice:
    if cutoff < 1:
        raise ValueError(f"cutoff must be >= 1, got {cutoff}")
    r = np.arange(-cutoff, cutoff + 1)
    ints = np.stack(np.meshgrid(r, r, r, indexing="ij"))
    radii = np.array(domain.radii).reshape(3, 1, 1, 1)
    theta = np.array(domain.theta).reshape(3, 1, 1, 1)
    check = ints / radii
    norm_sq = (theta * ints.astype(float) ** 2).sum(axis=0)
    for a in (ints, check, norm_sq):
        a.setflags(write=False)
    return Lattice(domain, cutoff, ints, check, norm_sq)


def helical_projectors(lat: Lattice) -> np.ndarray:
    """Spectral projectors of ``check(n) x`` restricted to the plane ``check(n)^perp``.

    Returns ``(2, 3, 3, L, L, L)``: index 0 projects onto the eigenvalue ``+i``
    of ``K_n = R_n / |check n|`` (so ``M_{alpha n}`` acts as ``+i omega``), index 1
    onto ``-i``.  The two sum to the Leray projector; the origin is zero.
    """
    c = lat.check
    inv = np.zeros(lat.shape)
    np.divide(1.0, lat.norm, out=inv, where=lat.nonzero)
    k = c * inv[None]
    z = np.zeros(lat.shape)
    kmat = np.array([[z, -k[2], k[1]], [k[2], z, -k[0]], [-k[1], k[0], z]])
    eye = np.eye(3).reshape(3, 3, 1, 1, 1)
    p = eye - np.einsum("i...,j...->ij...", k, k)
    p = p * lat.nonzero
    out = np.empty((2, 3, 3) + lat.shape, dtype=complex)
    out[0] = 0.5 * (p - 1j * kmat)
    out[1] = 0.5 * (p + 1j * kmat)
    return out


def norm_classes(lat: Lattice, rtol: float = 1e-12) -> np.ndarray:
    """Integer labels with equal label iff ``|check n|^2`` agree.

    Exact integer keys are used when every ``theta_j`` is rational; otherwise
    values are clustered in extended precision with relative tolerance ``rtol``.
    """
    thetas = rational_thetas(lat.domain)
    if thetas is not None:
        den = math.lcm(*(t.denominator for t in thetas))
        w = [int(t * den) for t in thetas]
        n = lat.ints.astype(object)
        keys = (w[0] * n[0] ** 2 + w[1] * n[1] ** 2 + w[2] * n[2] ** 2).astype(np.int64)
        _, labels = np.unique(keys, return_inverse=True)
        return labels.reshape(lat.shape)
    th = np.array(lat.domain.theta, dtype=np.longdouble).reshape(3, 1, 1, 1)
    vals = (th * lat.ints.astype(np.longdouble) ** 2).sum(axis=0).ravel()
    order = np.argsort(vals, kind="stable")
    sv = vals[order]
    gaps = np.diff(sv) > rtol * np.maximum(sv[1:], 1.0)
    ids = np.concatenate([[0], np.cumsum(gaps)])
    labels = np.empty_like(ids)
    labels[order] = ids
    return labels.reshape(lat.shape)


def dispersion_extended(lat: Lattice, alpha: float) -> np.ndarray:
    """``omega_alpha(n)`` over the cube in ``np.longdouble`` (zero at the origin)."""
    a = np.array(lat.domain.radii, dtype=np.longdouble).reshape(3, 1, 1, 1)
    chk = lat.ints.astype(np.longdouble) / a
    nsq = (chk * chk).sum(axis=0)
    nrm = np.sqrt(nsq)
    out = np.zeros(lat.shape, dtype=np.longdouble)
    np.divide(chk[2], nrm * (1 + np.longdouble(alpha) ** 2 * nsq), out=out, where=lat.nonzero)
    return out


def pair_indices(cutoff: int, k1: int):
    """Flat cube indices ``(k, m, n)`` of every pair with ``n = k + m`` in the cube and given ``k1``.

    Ordered by ``k`` then ``m`` (lexicographic flat order).
    """
    n = cutoff
    side = 2 * n + 1
    r = np.arange(-n, n + 1)
    ok1 = np.abs(k1 + r) <= n
    ok = np.abs(r[:, None] + r[None, :]) <= n
    # axes: k2, k3, m1, m2, m3
    mask = (ok[:, None, None, :, None] & ok[None, :, None, None, :]
            & ok1[None, None, :, None, None])
    k2, k3, m1, m2, m3 = np.nonzero(mask)
    i1 = k1 + n
    kf = (i1 * side + k2) * side + k3
    mf = (m1 * side + m2) * side + m3
    nf = ((i1 + m1 - n) * side + (k2 + m2 - n)) * side + (k3 + m3 - n)
    return kf, mf, nf

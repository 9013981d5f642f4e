"""Truncated divergence-free periodic vector fields.

A :class:`SpectralField` stores the full symmetric cube of coefficients
``v_n``, ``max_j |n_j| <= N``, as a ``(3, 2N+1, 2N+1, 2N+1)`` complex array.
Inner products are plain coefficient sums, so ``|v|^2 = sum_n |v_n|^2`` equals
the volume-normalised physical energy ``|T^3|^{-1} int |v|^2 dx``.
"""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import fft
from .lattice import DomainParams, Lattice, lattice

__all__ = [
    "SpectralField",
    "FieldNormReport",
    "LatticeMismatch",
    "CONVENTION",
    "zeros",
    "project_divergence_free",
    "barotropic_part",
    "baroclinic_part",
    "inner_product",
    "norms",
    "random_field",
    "default_profile",
    "to_physical",
    "from_physical",
    "embed",
    "extract",
    "divergence_residual",
    "reality_residual",
    "write_snapshot",
    "read_snapshot",
    "export_mode_csv",
]

CONVENTION = "coeff-l2;exp(i checkn.x);phys/|T3|"
SNAPSHOT_MAGIC = b"RAF1"
_HEADER = struct.Struct("<4s3ddid")


class LatticeMismatch(ValueError):
    """Two fields live on different lattices."""


@dataclass(frozen=True, eq=False)
class SpectralField:
    domain: DomainParams
    cutoff: int
    coeffs: np.ndarray

    def __post_init__(self):
        side = 2 * self.cutoff + 1
        if self.coeffs.shape != (3, side, side, side):
            raise ValueError(f"coeff shape {self.coeffs.shape} does not match cutoff {self.cutoff}")
        c = np.ascontiguousarray(self.coeffs, dtype=np.complex128)
        if c is self.coeffs:
            c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def lattice(self) -> Lattice:
        return lattice(self.domain, self.cutoff)

    def same_lattice(self, other: "SpectralField") -> bool:
        return self.cutoff == other.cutoff and self.domain == other.domain

    def _check(self, other):
        if not self.same_lattice(other):
            raise LatticeMismatch(
                f"fields on different lattices: ({self.domain}, N={self.cutoff}) vs "
                f"({other.domain}, N={other.cutoff})")

    def with_coeffs(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(self.domain, self.cutoff, coeffs)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, scalar) -> "SpectralField":
        return self.with_coeffs(self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return self.with_coeffs(-self.coeffs)

    def mode(self, n) -> np.ndarray:
        return self.coeffs[(slice(None),) + self.lattice.index(n)]

    def scale_modes(self, factor: np.ndarray) -> "SpectralField":
        """Multiply every mode by a scalar per-mode factor of lattice shape."""
        return self.with_coeffs(self.coeffs * factor[None])

    def apply_blocks(self, mats: np.ndarray) -> "SpectralField":
        """Apply per-mode 3x3 matrices of shape ``(3, 3, L, L, L)``."""
        return self.with_coeffs(np.einsum("ij...,j...->i...", mats, self.coeffs))

    def max_abs(self) -> float:
        return float(np.abs(self.coeffs).max())


def zeros(domain: DomainParams, cutoff: int) -> SpectralField:
    side = 2 * cutoff + 1
    return SpectralField(domain, cutoff, np.zeros((3, side, side, side), complex))


def _flip(c: np.ndarray) -> np.ndarray:
    """Coefficients at ``-n``."""
    return c[:, ::-1, ::-1, ::-1]


def _leray(c: np.ndarray, lat: Lattice) -> np.ndarray:
    div = np.einsum("i...,i...->...", lat.check, c)
    return c - lat.check * (div * lat.inv_norm_sq)[None]


def project_divergence_free(raw, domain: Optional[DomainParams] = None,
                            cutoff: Optional[int] = None, symmetrize: bool = True) -> SpectralField:
    """Leray-project raw coefficients onto a valid field.

    ``raw`` is a :class:`SpectralField` or a bare coefficient array (then
    ``domain`` and ``cutoff`` are required).  With ``symmetrize`` the reality
    condition ``v_{-n} = conj(v_n)`` is imposed first by averaging.
    """
    if isinstance(raw, SpectralField):
        domain, cutoff, c = raw.domain, raw.cutoff, raw.coeffs
    else:
        if domain is None or cutoff is None:
            raise ValueError("a bare coefficient array needs domain and cutoff")
        c = np.asarray(raw, dtype=complex)
    lat = lattice(domain, cutoff)
    if symmetrize:
        c = 0.5 * (c + np.conj(_flip(c)))
    c = _leray(c, lat)
    c[(slice(None),) + lat.origin] = 0.0
    return SpectralField(domain, cutoff, c)


def barotropic_part(v: SpectralField) -> SpectralField:
    """The ``x3``-average: keeps exactly the ``n3 = 0`` modes."""
    return v.scale_modes(v.lattice.barotropic_mask.astype(float))


def baroclinic_part(v: SpectralField) -> SpectralField:
    return v.scale_modes((~v.lattice.barotropic_mask).astype(float))


def inner_product(u: SpectralField, v: SpectralField, s: float = 0.0) -> float:
    """``sum_n |check n|^{2s} Re(u_n . conj v_n)``."""
    u._check(v)
    dots = np.einsum("i...,i...->...", u.coeffs, np.conj(v.coeffs)).real
    if s != 0:
        lat = u.lattice
        w = np.zeros(lat.shape)
        w[lat.nonzero] = lat.norm_sq[lat.nonzero] ** s
        dots = dots * w
    return float(dots.sum())


@dataclass(frozen=True)
class FieldNormReport:
    l2: float
    h1: float
    alpha_energy: float
    field: SpectralField

    def hs(self, s: float) -> float:
        return float(np.sqrt(inner_product(self.field, self.field, s)))


def norms(v: SpectralField, alpha: float = 0.0) -> FieldNormReport:
    rv = v.scale_modes(v.lattice.helmholtz(alpha))
    return FieldNormReport(
        l2=float(np.sqrt(inner_product(v, v))),
        h1=float(np.sqrt(inner_product(v, v, 1.0))),
        alpha_energy=0.5 * inner_product(v, rv),
        field=v,
    )


def default_profile(k: np.ndarray, k0: float = 2.0) -> np.ndarray:
    """Per-mode energy ``|v_n|^2`` as a function of ``|check n|``."""
    return (k / k0) ** 4 * np.exp(-2.0 * (k / k0) ** 2)


def random_field(domain: DomainParams, cutoff: int, seed: int = 0,
                 spectrum_profile: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                 support: Optional[np.ndarray] = None) -> SpectralField:
    """Random divergence-free real field with ``|v_n|^2 = profile(|check n|)``.

    ``support`` optionally restricts the nonzero modes (boolean lattice mask;
    it must be symmetric under ``n -> -n``).
    """
    lat = lattice(domain, cutoff)
    profile = spectrum_profile or default_profile
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((2,) + (3,) + lat.shape)
    c = g[0] + 1j * g[1]
    c = _leray(c + np.conj(_flip(c)), lat)
    mag = np.sqrt(np.einsum("i...,i...->...", c, np.conj(c)).real)
    target = np.zeros(lat.shape)
    target[lat.nonzero] = np.sqrt(profile(lat.norm[lat.nonzero]))
    if support is not None:
        target = np.where(support, target, 0.0)
    scale = np.zeros(lat.shape)
    np.divide(target, mag, out=scale, where=mag > 0)
    c = c * scale[None]
    c[(slice(None),) + lat.origin] = 0.0
    return SpectralField(domain, cutoff, c)


# --------------------------------------------------------------------------
# physical space


def embed(coeffs: np.ndarray, grid: int) -> np.ndarray:
    """Place cube coefficients into an FFT-ordered ``grid**3`` array."""
    side = coeffs.shape[-1]
    n = side // 2
    if grid < side:
        raise ValueError(f"grid {grid} cannot hold cutoff {n}")
    idx = np.arange(-n, n + 1) % grid
    out = np.zeros(coeffs.shape[:-3] + (grid,) * 3, dtype=complex)
    out[..., idx[:, None, None], idx[None, :, None], idx[None, None, :]] = coeffs
    return out


def extract(spec: np.ndarray, cutoff: int) -> np.ndarray:
    grid = spec.shape[-1]
    idx = np.arange(-cutoff, cutoff + 1) % grid
    return spec[..., idx[:, None, None], idx[None, :, None], idx[None, None, :]]


def to_physical(v: SpectralField, grid: Optional[int] = None) -> np.ndarray:
    """Values of ``sum_n v_n exp(i check n . x)`` on the uniform ``grid**3`` mesh."""
    grid = grid or 2 * v.cutoff + 2
    phys = fft.ifftn(embed(v.coeffs, grid)) * grid**3
    return phys.real


def from_physical(u: np.ndarray, domain: DomainParams, cutoff: int) -> SpectralField:
    grid = u.shape[-1]
    spec = fft.fftn(u) / grid**3
    return SpectralField(domain, cutoff, extract(spec, cutoff))


# --------------------------------------------------------------------------
# invariant residuals


def divergence_residual(v: SpectralField) -> float:
    """``max_n |check n . v_n| / |check n|`` relative to ``max_n |v_n|``.

    Normalising by the largest mode keeps modes that are zero up to rounding
    from dominating the measure.
    """
    lat = v.lattice
    div = np.abs(np.einsum("i...,i...->...", lat.check, v.coeffs))
    top = float(np.sqrt((np.abs(v.coeffs) ** 2).sum(axis=0)).max())
    if top == 0:
        return 0.0
    return float((div[lat.nonzero] / lat.norm[lat.nonzero]).max()) / top


def reality_residual(v: SpectralField) -> float:
    return float(np.abs(v.coeffs - np.conj(_flip(v.coeffs))).max())


# --------------------------------------------------------------------------
# files


def write_snapshot(path, v: SpectralField, alpha: float, time: float,
                   convention: str = CONVENTION, provenance: str = "") -> None:
    """Binary snapshot: header then little-endian f64 (re, im) per component.

    The UTF-8 tag holds the convention string, then optional provenance
    after a newline.
    """
    tag = (convention + ("\n" + provenance if provenance else "")).encode("utf-8")
    d = v.domain
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(SNAPSHOT_MAGIC, d.a1, d.a2, d.a3, alpha, v.cutoff, time))
        fh.write(struct.pack("<H", len(tag)))
        fh.write(tag)
        body = np.moveaxis(v.coeffs, 0, -1).astype("<c16")
        fh.write(body.tobytes(order="C"))


def read_snapshot(path) -> tuple[SpectralField, dict]:
    raw = Path(path).read_bytes()
    magic, a1, a2, a3, alpha, cutoff, time = _HEADER.unpack_from(raw, 0)
    if magic != SNAPSHOT_MAGIC:
        raise ValueError(f"not a snapshot file (magic {magic!r})")
    off = _HEADER.size
    (ntag,) = struct.unpack_from("<H", raw, off)
    off += 2
    convention, _, provenance = raw[off:off + ntag].decode("utf-8").partition("\n")
    off += ntag
    side = 2 * cutoff + 1
    body = np.frombuffer(raw, dtype="<c16", offset=off)
    if body.size != 3 * side**3:
        raise ValueError(f"snapshot body has {body.size} coefficients, expected {3 * side**3}")
    coeffs = np.moveaxis(body.reshape(side, side, side, 3), -1, 0)
    # radius bounds are not stored; widen them so any stored box loads
    domain = DomainParams(a1, a2, a3, a_min=min(a2, a3, 1.0), a_max=max(a2, a3, 1.0))
    meta = {"alpha": alpha, "time": time, "convention": convention, "provenance": provenance}
    return SpectralField(domain, cutoff, coeffs), meta


def export_mode_csv(path, v: SpectralField, header_lines: tuple[str, ...] = ()) -> None:
    lat = v.lattice
    mag = np.sqrt((np.abs(v.coeffs) ** 2).sum(axis=0))
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["n1", "n2", "n3", "norm_check", "magnitude"])
        for idx in np.ndindex(lat.shape):
            n = lat.ints[(slice(None),) + idx]
            w.writerow([int(n[0]), int(n[1]), int(n[2]), repr(float(lat.norm[idx])),
                        repr(float(mag[idx]))])

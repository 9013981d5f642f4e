"""Bilinear operators, Stokes and Coriolis operators.

Two evaluation paths are provided for the quadratic terms:

``direct``
    exact Galerkin convolution over all pairs ``k + m = n`` inside the cube.
    Cost is quadratic in the mode count; this is the reference path.
``fft``
    pseudospectral products on a padded grid of at least ``3N + 1`` points per
    direction, so that no product mode aliases back onto the retained cube.
    Agrees with ``direct`` to round-off.

Sign conventions follow the evolution equation
``dv/dt + Omega M_alpha v + nu A v + B_alpha(v, v) = f`` with
``B_alpha(u, v) = -P_L[R_alpha u x curl v]``.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
import scipy.fft

from . import fft
from .field import SpectralField, embed, extract, zeros
from .lattice import (DomainParams, J_MATRIX, Lattice, helical_projectors, lattice,
                      norm_classes, pair_indices)

__all__ = [
    "BilinearWorkspace",
    "workspace",
    "leray",
    "alpha_product",
    "bilinear_alpha",
    "bilinear_classical",
    "stokes_apply",
    "coriolis_apply",
    "coriolis_blocks",
    "catalytic_form",
    "catalytic_bilinear",
    "B_I",
    "B_II",
    "frequency_classes",
    "OrthogonalityReport",
    "verify_orthogonality_identities",
]

# cap on pairs materialised at once on the direct path
_PAIR_CHUNK = 2_000_000


@dataclass(frozen=True, eq=False)
class BilinearWorkspace:
    """Per-lattice tables shared by the bilinear operators.

    ``grid >= 3 N + 1``: a product of two cube fields has modes up to ``2 N``,
    whose wrap-around lands outside the cube, so truncating back to the cube
    after the transform is alias-free without a separate mask.
    """

    lat: Lattice
    grid: int

    @property
    def cutoff(self) -> int:
        return self.lat.cutoff

    def to_grid(self, c: np.ndarray) -> np.ndarray:
        return fft.ifftn(embed(c, self.grid)) * self.grid**3

    def from_grid(self, p: np.ndarray) -> np.ndarray:
        return extract(fft.fftn(p), self.cutoff) / self.grid**3

    @functools.cached_property
    def pair_table(self):
        """All flat ``(k, m, n)`` index triples at once; ``None`` if too large."""
        n = self.cutoff
        side = 2 * n + 1
        if side**6 > 8 * _PAIR_CHUNK * side:
            return None
        slabs = [pair_indices(n, k1) for k1 in range(-n, n + 1)]
        return tuple(np.concatenate([sl[i] for sl in slabs]) for i in range(3))

    def iter_pairs(self):
        if self.pair_table is not None:
            yield self.pair_table
            return
        n = self.cutoff
        for k1 in range(-n, n + 1):
            yield pair_indices(n, k1)


@functools.lru_cache(maxsize=16)
def workspace(domain: DomainParams, cutoff: int) -> BilinearWorkspace:
    lat = lattice(domain, cutoff)
    grid = scipy.fft.next_fast_len(3 * cutoff + 1)
    return BilinearWorkspace(lat, grid)


def leray(c: np.ndarray, lat: Lattice) -> np.ndarray:
    """Per-mode Leray projection of ``(3, ..., L, L, L)`` coefficients; origin set to zero."""
    chk = lat.check.reshape((3,) + (1,) * (c.ndim - 4) + lat.shape)
    div = (chk * c).sum(axis=0)
    out = c - chk * (div * lat.inv_norm_sq)[None]
    out[(Ellipsis,) + lat.origin] = 0.0
    return out


def alpha_product(u: np.ndarray, v: np.ndarray, alpha: float, lat: Lattice) -> np.ndarray:
    """``B_alpha`` on raw ``(3, ..., L, L, L)`` coefficient arrays via the padded transform."""
    extra = (1,) * (u.ndim - 4)
    ws = workspace(lat.domain, lat.cutoff)
    ru = u * lat.helmholtz(alpha).reshape(extra + lat.shape)[None]
    cv = 1j * _cross(lat.check.reshape((3,) + extra + lat.shape), v)
    prod = _cross(ws.to_grid(ru), ws.to_grid(cv))
    return leray(-ws.from_grid(prod), lat)


def _cross(a, b):
    out = np.empty(np.broadcast_shapes(a.shape, b.shape), dtype=np.result_type(a, b))
    np.subtract(a[1] * b[2], a[2] * b[1], out=out[0])
    np.subtract(a[2] * b[0], a[0] * b[2], out=out[1])
    np.subtract(a[0] * b[1], a[1] * b[0], out=out[2])
    return out


def _accumulate(nf, terms, size):
    out = np.empty((3, size), dtype=complex)
    for i in range(3):
        out[i] = (np.bincount(nf, weights=terms[i].real, minlength=size)
                  + 1j * np.bincount(nf, weights=terms[i].imag, minlength=size))
    return out


def _check_pair(u: SpectralField, v: SpectralField):
    if not u.same_lattice(v):
        u._check(v)


def bilinear_alpha(u: SpectralField, v: SpectralField, alpha: float,
                   path: str = "fft") -> SpectralField:
    """``B_alpha(u, v) = -P_L[R_alpha u x curl v]`` (filter on the advecting slot)."""
    _check_pair(u, v)
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    lat = u.lattice
    if path == "fft":
        return u.with_coeffs(alpha_product(u.coeffs, v.coeffs, alpha, lat))
    ru = u.coeffs * lat.helmholtz(alpha)[None]
    cv = 1j * _cross(lat.check, v.coeffs)
    if path == "direct":
        ws = workspace(u.domain, u.cutoff)
        size = lat.side**3
        ruf = ru.reshape(3, size)
        cvf = cv.reshape(3, size)
        acc = np.zeros((3, size), dtype=complex)
        for kf, mf, nf in ws.iter_pairs():
            acc += _accumulate(nf, _cross(np.take(ruf, kf, axis=1), np.take(cvf, mf, axis=1)), size)
        return u.with_coeffs(leray(-acc.reshape(u.coeffs.shape), lat))
    raise ValueError(f"unknown path {path!r}")


def bilinear_classical(u: SpectralField, v: SpectralField, path: str = "fft") -> SpectralField:
    """``B(u, v) = P_L[(u . grad) v]``."""
    _check_pair(u, v)
    lat = u.lattice
    if path == "fft":
        ws = workspace(u.domain, u.cutoff)
        ug = ws.to_grid(u.coeffs)
        adv = np.zeros((3,) + (ws.grid,) * 3, dtype=complex)
        for j in range(3):
            adv += ug[j][None] * ws.to_grid(1j * lat.check[j][None] * v.coeffs)
        return u.with_coeffs(leray(ws.from_grid(adv), lat))
    if path == "direct":
        ws = workspace(u.domain, u.cutoff)
        size = lat.side**3
        uf = u.coeffs.reshape(3, size)
        vf = v.coeffs.reshape(3, size)
        chk = lat.check.reshape(3, size)
        acc = np.zeros((3, size), dtype=complex)
        for kf, mf, nf in ws.iter_pairs():
            s = (np.take(chk, mf, axis=1) * np.take(uf, kf, axis=1)).sum(axis=0)
            acc += _accumulate(nf, 1j * s[None] * np.take(vf, mf, axis=1), size)
        return u.with_coeffs(leray(acc.reshape(u.coeffs.shape), lat))
    raise ValueError(f"unknown path {path!r}")


def stokes_apply(v: SpectralField) -> SpectralField:
    """``A v = -P_L Laplacian v``: multiply each mode by ``|check n|^2``."""
    return v.scale_modes(v.lattice.norm_sq)


def coriolis_blocks(lat: Lattice, alpha: float) -> np.ndarray:
    """All ``M_{alpha n}`` as a ``(3, 3, L, L, L)`` array (zero at the origin)."""
    c = lat.check
    p = np.eye(3).reshape(3, 3, 1, 1, 1) - np.einsum("i...,j...->ij...", c, c) * lat.inv_norm_sq
    pjp = np.einsum("ij...,jk,kl...->il...", p, J_MATRIX, p)
    return pjp * (lat.helmholtz(alpha) * lat.nonzero)


def coriolis_apply(v: SpectralField, alpha: float) -> SpectralField:
    """``P_L J P_L R_alpha v``; the caller multiplies by ``Omega``."""
    return v.apply_blocks(coriolis_blocks(v.lattice, alpha))


# --------------------------------------------------------------------------
# catalytic operator


@dataclass(frozen=True)
class FrequencyClasses:
    """Baroclinic modes grouped by signed wave frequency.

    ``labels[s, n]`` is the class of the helical component ``s`` of mode ``n``
    (``-1`` on barotropic modes).  Two components share a class iff they sit in
    the same ``n3`` plane with equal ``|check n|`` and equal helicity sign,
    which for a fixed plane is equivalent to equal frequency.
    """

    labels: np.ndarray
    count: int
    plane: np.ndarray


@functools.lru_cache(maxsize=16)
def frequency_classes(domain: DomainParams, cutoff: int) -> FrequencyClasses:
    lat = lattice(domain, cutoff)
    norms = norm_classes(lat)
    labels = -np.ones((2,) + lat.shape, dtype=np.int64)
    key_to_id = {}
    planes = []
    for s in range(2):
        for idx in zip(*np.nonzero(~lat.barotropic_mask)):
            key = (int(lat.ints[2][idx]), int(norms[idx]), s)
            cid = key_to_id.get(key)
            if cid is None:
                cid = key_to_id[key] = len(key_to_id)
                planes.append(key[0])
            labels[(s,) + idx] = cid
    return FrequencyClasses(labels, len(key_to_id), np.array(planes, dtype=np.int64))


def _plane_grid(cutoff: int) -> int:
    return scipy.fft.next_fast_len(3 * cutoff + 1)


def _to_plane(c2: np.ndarray, grid: int) -> np.ndarray:
    n = c2.shape[-1] // 2
    idx = np.arange(-n, n + 1) % grid
    out = np.zeros(c2.shape[:-2] + (grid, grid), dtype=complex)
    out[..., idx[:, None], idx[None, :]] = c2
    return scipy.fft.ifft2(out, workers=fft.get_threads()) * grid**2


def _from_plane(p: np.ndarray, cutoff: int) -> np.ndarray:
    grid = p.shape[-1]
    idx = np.arange(-cutoff, cutoff + 1) % grid
    spec = scipy.fft.fft2(p, workers=fft.get_threads()) / grid**2
    return spec[..., idx[:, None], idx[None, :]]


def B_I(a: SpectralField, b: SpectralField, alpha: float) -> SpectralField:
    """Horizontal ``alpha``-model interaction of the barotropic parts, ``B_alpha(a_bar, b_bar)``.

    Evaluated with 2-D transforms on the ``n3 = 0`` plane, so the result is
    supported on that plane exactly.
    """
    _check_pair(a, b)
    lat = a.lattice
    n = a.cutoff
    grid = _plane_grid(n)
    ck = lat.check[:, :, :, n]
    abar = a.coeffs[:, :, :, n]
    bbar = b.coeffs[:, :, :, n]
    ra = _to_plane(abar * lat.helmholtz(alpha)[:, :, n][None], grid)
    cb = _to_plane(1j * _cross(ck, bbar), grid)
    out2 = -_from_plane(_cross(ra, cb), n)
    c = np.zeros_like(a.coeffs)
    c[:, :, :, n] = out2
    return a.with_coeffs(leray(c, lat))


def _cross1(a, b):
    """Cross product of vectors stored along axis 1."""
    return np.stack([a[:, 1] * b[:, 2] - a[:, 2] * b[:, 1],
                     a[:, 2] * b[:, 0] - a[:, 0] * b[:, 2],
                     a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]], axis=1)


def B_II(a: SpectralField, b: SpectralField, alpha: float, chunk: int = 256) -> SpectralField:
    """Resonant catalytic coupling of barotropic ``a_bar`` with baroclinic ``b_perp``.

    For each frequency class ``lam`` of baroclinic helical components,
    ``Pi_lam [B_alpha(a_bar, Pi_lam b) + B_alpha(Pi_lam b, a_bar)]``; the
    products are formed in physical space plane by plane.
    """
    _check_pair(a, b)
    lat = a.lattice
    n = a.cutoff
    cls = frequency_classes(a.domain, n)
    if cls.count == 0:
        return zeros(a.domain, n)
    hp = helical_projectors(lat)
    grid = _plane_grid(n)
    rfilt = lat.helmholtz(alpha)
    a0 = a.coeffs[:, :, :, n]
    ra0 = _to_plane(a0 * rfilt[:, :, n][None], grid)[None]
    ca0 = _to_plane(1j * _cross(lat.check[:, :, :, n], a0), grid)[None]
    bh = np.einsum("sij...,j...->si...", hp, b.coeffs)      # (2, 3, L, L, L)
    # plane-major views: (L3, ...) so a class block gathers its planes
    lab_p = np.moveaxis(cls.labels, -1, 0)                  # (L3, 2, L, L)
    bh_p = np.moveaxis(bh, -1, 0)                           # (L3, 2, 3, L, L)
    ck_p = np.moveaxis(lat.check, -1, 0)                    # (L3, 3, L, L)
    rf_p = np.moveaxis(rfilt, -1, 0)                        # (L3, L, L)
    hp_p = np.moveaxis(hp, -1, 0)                           # (L3, 2, 3, 3, L, L)
    out = np.zeros_like(a.coeffs)
    ids = np.arange(cls.count)
    for start in range(0, cls.count, chunk):
        block = ids[start:start + chunk]
        pidx = cls.plane[block] + n
        sel = lab_p[pidx] == block[:, None, None, None]      # (nb, 2, L, L)
        g = (bh_p[pidx] * sel[:, :, None]).sum(axis=1)       # (nb, 3, L, L)
        curl_g = _to_plane(1j * _cross1(ck_p[pidx], g), grid)
        rg = _to_plane(g * rf_p[pidx][:, None], grid)
        spec = -_from_plane(_cross1(ra0, curl_g) + _cross1(rg, ca0), n)
        ph = np.einsum("bsij...,bj...->bsi...", hp_p[pidx], spec)
        contrib = (ph * sel[:, :, None]).sum(axis=1)         # (nb, 3, L, L)
        np.add.at(out, (slice(None), slice(None), slice(None), pidx),
                  np.moveaxis(contrib, 0, -1))
    return a.with_coeffs(out)


def catalytic_form(a: SpectralField, b: SpectralField, alpha: float,
                   path: str = "physical", triads=None) -> SpectralField:
    """Bilinear catalytic operator ``B_I(a_bar, b_bar) + B_II(a_bar, b_perp)``.

    ``path="resonant"`` evaluates the same operator as an explicit sum over the
    ``K2D``, ``K24`` and ``K34`` triads of ``triads`` (a resonant triad set
    enumerated on the same lattice).
    """
    if path == "physical":
        return B_I(a, b, alpha) + B_II(a, b, alpha)
    if path == "resonant":
        from .field import barotropic_part, baroclinic_part
        from .poincare import resonant_form
        if triads is None:
            raise ValueError("the resonant-sum path needs a triad set")
        abar, bbar, bperp = barotropic_part(a), barotropic_part(b), baroclinic_part(b)
        return -(resonant_form(abar, bbar, alpha, triads, classes=("K2D",))
                 + resonant_form(abar, bperp, alpha, triads, classes=("K24",))
                 + resonant_form(bperp, abar, alpha, triads, classes=("K34",)))
    raise ValueError(f"unknown path {path!r}")


def catalytic_bilinear(w: SpectralField, alpha: float, path: str = "physical",
                       triads=None) -> SpectralField:
    """``B_c(w, w)``, the nonlinearity of the catalytic resonant-limit system."""
    return catalytic_form(w, w, alpha, path=path, triads=triads)


# --------------------------------------------------------------------------
# orthogonality identities of the linearised catalytic flow


@dataclass(frozen=True)
class OrthogonalityReport:
    """Residuals of the barotropic/baroclinic orthogonality identities.

    ``residuals`` maps a short name to an absolute residual; ``max`` is their
    maximum.
    """

    residuals: dict

    @property
    def max(self) -> float:
        return max(self.residuals.values())


def verify_orthogonality_identities(w: SpectralField, phi: SpectralField, alpha: float,
                                    triads=None, nu: float = 1.0) -> OrthogonalityReport:
    """Evaluate the identities used to reduce the trace of the linearised flow.

    ``triads`` (all classes, same lattice) enables the resonant-projection
    check; it is enumerated on the fly when omitted.
    """
    from .field import barotropic_part, baroclinic_part, inner_product
    from .poincare import resonant_form
    from .resonance import enumerate_resonances

    _check_pair(w, phi)
    if triads is None:
        triads = enumerate_resonances(w.domain, alpha, w.cutoff)
    wb, wp = barotropic_part(w), baroclinic_part(w)
    pb, pp = barotropic_part(phi), baroclinic_part(phi)
    r = {}
    r["stokes_bar_perp"] = abs(inner_product(stokes_apply(pb) * nu, pp))
    r["stokes_perp_bar"] = abs(inner_product(stokes_apply(pp) * nu, pb))
    # B_I is the barotropic part of the (catalytic-sign) resonant form, symmetrised
    sym = B_I(w, phi, alpha) + B_I(phi, w, alpha)
    full = -(resonant_form(w, phi, alpha, triads) + resonant_form(phi, w, alpha, triads))
    r["B_I_is_barotropic_projection"] = (sym - barotropic_part(full)).max_abs()
    diag = barotropic_part(-resonant_form(w, w, alpha, triads))
    r["B_I_diagonal_projection"] = (B_I(w, w, alpha) - diag).max_abs()
    r["B_I_w_phi_perp"] = abs(inner_product(B_I(wb, pb, alpha), pp))
    r["B_I_phi_w_perp"] = abs(inner_product(B_I(pb, wb, alpha), pp))
    r["B_II_to_barotropic"] = abs(inner_product(B_II(wb, pp, alpha), pb))
    r["B_II_sum_to_barotropic"] = abs(inner_product(B_II(wb, pp, alpha) + B_II(pb, wp, alpha), pb))
    r["B_II_neutral"] = abs(inner_product(B_II(wb, pp, alpha), pp))
    return OrthogonalityReport(r)

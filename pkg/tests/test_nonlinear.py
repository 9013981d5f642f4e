import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rotalpha.field import (baroclinic_part, barotropic_part, divergence_residual, inner_product,
                            norms, random_field, reality_residual, zeros)
from rotalpha.lattice import DomainParams, lattice, leray_projector, wavevector
from rotalpha.nonlinear import (B_I, B_II, bilinear_alpha, bilinear_classical, catalytic_bilinear,
                                catalytic_form, coriolis_apply, frequency_classes, stokes_apply,
                                verify_orthogonality_identities)
from rotalpha.resonance import enumerate_resonances

BOX = DomainParams(a2=1.3, a3=0.7)


def _oracle(u, v, alpha, kind):
    """Mode-by-mode convolution with explicit Python loops."""
    lat = u.lattice
    n = u.cutoff
    r = range(-n, n + 1)
    out = np.zeros_like(u.coeffs)
    for k in itertools.product(r, r, r):
        for m in itertools.product(r, r, r):
            s = tuple(a + b for a, b in zip(k, m))
            if max(map(abs, s)) > n or s == (0, 0, 0):
                continue
            uk, vm = u.mode(k), v.mode(m)
            cm = wavevector(m, u.domain).check
            if kind == "alpha":
                rk = lat.helmholtz(alpha)[lat.index(k)]
                term = -rk * np.cross(uk, 1j * np.cross(cm, vm))
            else:
                term = 1j * (cm @ uk) * vm
            out[(slice(None),) + lat.index(s)] += term
    for s in itertools.product(r, r, r):
        if s != (0, 0, 0):
            idx = (slice(None),) + lat.index(s)
            out[idx] = leray_projector(wavevector(s, u.domain)).entries @ out[idx]
    return out


@pytest.mark.parametrize("path", ["direct", "fft"])
def test_bilinear_against_loop_oracle(path):
    u, v = random_field(BOX, 2, 1), random_field(BOX, 2, 2)
    ref_a = _oracle(u, v, 0.7, "alpha")
    ref_c = _oracle(u, v, 0.0, "classical")
    assert np.abs(bilinear_alpha(u, v, 0.7, path).coeffs - ref_a).max() <= 1e-13
    assert np.abs(bilinear_classical(u, v, path).coeffs - ref_c).max() <= 1e-13


@pytest.mark.parametrize("cutoff", [2, 4, 6])
def test_direct_and_fft_agree(cutoff):
    u, v = random_field(BOX, cutoff, 3), random_field(BOX, cutoff, 4)
    for alpha in (0.0, 0.5):
        d = bilinear_alpha(u, v, alpha, "direct") - bilinear_alpha(u, v, alpha, "fft")
        assert d.max_abs() <= 1e-10
    d = bilinear_classical(u, v, "direct") - bilinear_classical(u, v, "fft")
    assert d.max_abs() <= 1e-10


def test_outputs_are_valid_fields():
    u, v = random_field(BOX, 3, 5), random_field(BOX, 3, 6)
    for out in (bilinear_alpha(u, v, 0.3), bilinear_classical(u, v), B_I(u, v, 0.3),
                B_II(u, v, 0.3), catalytic_bilinear(u, 0.3)):
        assert divergence_residual(out) <= 1e-13
        assert reality_residual(out) <= 1e-14
        assert np.all(out.coeffs[:, 3, 3, 3] == 0)


@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 1000))
def test_bilinearity(a, b, seed):
    u, u2, v = (random_field(BOX, 2, seed + i) for i in range(3))
    lhs = bilinear_alpha(u * a + u2 * b, v, 0.4)
    rhs = bilinear_alpha(u, v, 0.4) * a + bilinear_alpha(u2, v, 0.4) * b
    assert (lhs - rhs).max_abs() <= 1e-13 * max(1.0, abs(a) + abs(b))
    lhs = bilinear_classical(v, u * a + u2 * b)
    rhs = bilinear_classical(v, u) * a + bilinear_classical(v, u2) * b
    assert (lhs - rhs).max_abs() <= 1e-13 * max(1.0, abs(a) + abs(b))


@pytest.mark.parametrize("path", ["direct", "fft"])
def test_energy_neutrality(path):
    u, v = random_field(BOX, 4, 7), random_field(BOX, 4, 8)
    scale = norms(u).l2 * norms(v).h1 * norms(v).l2
    assert abs(inner_product(bilinear_classical(u, v, path), v)) <= 1e-12 * scale
    rv = v.scale_modes(v.lattice.helmholtz(0.6))
    assert abs(inner_product(bilinear_alpha(v, v, 0.6, path), rv)) <= 1e-12 * scale


@given(st.integers(0, 10**6), st.floats(0.0, 2.0))
def test_bilinear_relation(seed, alpha):
    """<B_a(u,v),w> = <B(Ru,v),w> - <B(w,v),Ru>."""
    u, v, w = (random_field(BOX, 2, seed + i) for i in range(3))
    ru = u.scale_modes(u.lattice.helmholtz(alpha))
    lhs = inner_product(bilinear_alpha(u, v, alpha, "direct"), w)
    rhs = (inner_product(bilinear_classical(ru, v, "direct"), w)
           - inner_product(bilinear_classical(w, v, "direct"), ru))
    assert abs(lhs - rhs) <= 1e-12 * norms(u).l2 * norms(v).h1 * norms(w).l2


def test_alpha_zero_reduces_to_rotational_form():
    """At alpha = 0, B_0(u,u) and B(u,u) differ by a gradient, which P_L removes."""
    u = random_field(BOX, 3, 9)
    assert (bilinear_alpha(u, u, 0.0) - bilinear_classical(u, u)).max_abs() <= 1e-13


def test_stokes_and_coriolis():
    v = random_field(BOX, 3, 10)
    lat = v.lattice
    assert np.array_equal(stokes_apply(v).coeffs, v.coeffs * lat.norm_sq)
    for alpha in (0.0, 0.5):
        mv = coriolis_apply(v, alpha)
        assert abs(inner_product(mv, v)) <= 1e-13 * norms(v).l2 ** 2
        assert divergence_residual(mv) <= 1e-13
    big = [coriolis_apply(v, a).max_abs() for a in (100.0, 200.0)]
    assert np.isclose(big[0] / big[1], 4.0, rtol=1e-3)


def test_coriolis_on_barotropic_in_plane_field():
    lat = lattice(BOX, 2)
    c = np.zeros((3,) + lat.shape, complex)
    c[:, 3, 2, 2] = [0, 1, 0]
    c[:, 1, 2, 2] = [0, 1, 0]
    v = random_field(BOX, 2, 0).with_coeffs(c)
    mv = coriolis_apply(v, 0.0)
    assert inner_product(mv, v) == 0.0


def test_catalytic_limits():
    w = random_field(BOX, 3, 11)
    perp = baroclinic_part(w)
    assert catalytic_bilinear(perp, 0.3).max_abs() == 0.0
    bar = barotropic_part(w)
    assert (catalytic_bilinear(bar, 0.3) - bilinear_alpha(bar, bar, 0.3)).max_abs() <= 1e-13
    assert (B_I(w, w, 0.3) - bilinear_alpha(bar, bar, 0.3)).max_abs() <= 1e-13


def test_catalytic_paths_agree():
    w = random_field(BOX, 4, 12)
    tri = enumerate_resonances(BOX, 0.3, 4)
    a = catalytic_form(w, w, 0.3, path="physical")
    b = catalytic_form(w, w, 0.3, path="resonant", triads=tri)
    assert (a - b).max_abs() <= 1e-12
    with pytest.raises(ValueError):
        catalytic_form(w, w, 0.3, path="resonant")
    with pytest.raises(ValueError):
        catalytic_form(w, w, 0.3, path="bogus")


def test_catalytic_conserves_energy():
    w = random_field(BOX, 3, 13)
    out = catalytic_bilinear(w, 0.4)
    rw = w.scale_modes(w.lattice.helmholtz(0.4))
    assert abs(inner_product(out, rw)) <= 1e-13 * norms(w).h1 * norms(w).l2 ** 2


def test_frequency_classes_group_equal_frequencies():
    fc = frequency_classes(BOX, 3)
    lat = lattice(BOX, 3)
    w = lat.dispersion(0.0)
    for s in range(2):
        lab = fc.labels[s]
        assert np.all(lab[lat.barotropic_mask] == -1)
        for cid in np.unique(lab[lab >= 0])[:50]:
            vals = w[lab == cid]
            assert np.ptp(vals) <= 1e-15
            assert len(np.unique(lat.ints[2][lab == cid])) == 1
    assert fc.count == len(np.unique(fc.labels[fc.labels >= 0]))


@pytest.mark.parametrize("alpha", [0.0, 0.5])
def test_orthogonality_identities(alpha):
    tri = enumerate_resonances(BOX, alpha, 3)
    for seed in range(5):
        w, phi = random_field(BOX, 3, 2 * seed), random_field(BOX, 3, 2 * seed + 1)
        rep = verify_orthogonality_identities(w, phi, alpha, tri)
        assert rep.max <= 1e-12, rep.residuals
    assert set(rep.residuals) >= {"stokes_bar_perp", "B_II_to_barotropic", "B_II_neutral"}


def test_mixed_catalytic_coupling_is_not_symmetric():
    """B_II(a_bar, b_perp) differs from the swapped coupling; only the symmetrised form projects."""
    w, phi = random_field(BOX, 3, 20), random_field(BOX, 3, 21)
    d = B_II(w, phi, 0.0) - B_II(phi, w, 0.0)
    assert d.max_abs() > 1e-6


def test_zero_inputs():
    z = zeros(BOX, 2)
    assert bilinear_alpha(z, z, 0.5).max_abs() == 0.0
    assert B_II(z, z, 0.5).max_abs() == 0.0

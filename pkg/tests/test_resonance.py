import csv

import numpy as np
import pytest

from oracles import cube_resonances, exact_class
from rotalpha.lattice import DomainParams, lattice, wavevector
from rotalpha.resonance import (CLASSES, ClassificationError, classify_triad, enumerate_resonances,
                                generic_domain_search, kstar_count, small_divisor_histogram,
                                uniform_box_sampler)

CUBE = DomainParams()
BOX = DomainParams(a2=1.3, a3=0.7)
GENERIC = DomainParams(a2=2 ** 0.25, a3=3 ** 0.25)


@pytest.mark.parametrize("cutoff", [1, 2, 3])
def test_matches_exact_oracle_on_cube(cutoff):
    got = enumerate_resonances(CUBE, 0.0, cutoff)
    assert got.as_tuples() == cube_resonances(cutoff)


def test_cube_counts():
    """Frozen values from the exact oracle."""
    assert enumerate_resonances(CUBE, 0.0, 2).counts == {
        "K2D": 288, "K14": 192, "K24": 192, "K34": 192, "KSTAR": 48}
    assert kstar_count(CUBE, 0.0, 4, 1e-9) == 384


def test_triad_set_invariants():
    tri = enumerate_resonances(BOX, 0.3, 3)
    assert np.array_equal(tri.k + tri.m, tri.n)
    assert np.all(tri.divisor <= tri.tolerance)
    assert np.all((tri.signs >= 1) & (tri.signs <= 4))
    for i in range(0, len(tri), 97):
        t = tri.triad(i)
        assert t.cls == CLASSES[tri.cls[i]]
        assert t.n.ints == tuple(int(x) for x in tri.n[i])
    kf, mf, nf = tri.flat_indices(["K24"])
    assert len(kf) == tri.counts["K24"]
    assert tri.matches(BOX, 0.3, 3) and not tri.matches(BOX, 0.2, 3)
    # the set is closed under (k, m) -> (m, k) and under n -> -n
    tuples = {(tuple(a), tuple(b)) for a, b in zip(tri.k.tolist(), tri.m.tolist())}
    assert all((b, a) in tuples for a, b in tuples)
    assert all((tuple(-x for x in a), tuple(-x for x in b)) in tuples for a, b in tuples)


def test_generic_box_has_no_strict_triads():
    tri = enumerate_resonances(GENERIC, 0.0, 6)
    assert tri.counts["KSTAR"] == 0
    assert not tri.exact_norms
    hist = small_divisor_histogram(GENERIC, 0.0, 6)
    assert hist.min_gap > 1e-9
    assert hist.zero_count == len(tri)


@pytest.mark.parametrize("domain", [CUBE, BOX, GENERIC])
def test_two_wave_classes_do_not_depend_on_alpha(domain):
    sets = [enumerate_resonances(domain, a, 4) for a in (0.0, 0.5, 1.0)]
    two_wave = [{t for t in s.as_tuples() if t[3] != "KSTAR"} for s in sets]
    assert two_wave[0] == two_wave[1] == two_wave[2]


def test_classify_triad():
    w = lambda n, d: wavevector(n, d)
    assert classify_triad(w((1, 0, 0), BOX), w((0, 1, 0), BOX), w((1, 1, 0), BOX), BOX) == "K2D"
    assert classify_triad(w((1, 0, 1), BOX), w((1, 0, -1), BOX), w((2, 0, 0), BOX), BOX) == "K14"
    assert classify_triad(w((2, 0, 0), BOX), w((-1, 0, 1), BOX), w((1, 0, 1), BOX), BOX) == "K24"
    assert classify_triad(w((-1, 0, 1), BOX), w((2, 0, 0), BOX), w((1, 0, 1), BOX), BOX) == "K34"
    assert classify_triad(w((1, 0, 1), CUBE), w((0, 1, 1), CUBE), w((1, 1, 2), CUBE), CUBE) == "KSTAR"
    # irrational box: norms compared in extended precision
    g = lambda n: wavevector(n, GENERIC)
    assert classify_triad(g((2, 0, 0)), g((-1, 0, 1)), g((1, 0, 1)), GENERIC) == "K24"
    with pytest.raises(ValueError):
        classify_triad(w((1, 0, 0), BOX), w((0, 1, 0), BOX), w((1, 0, 0), BOX), BOX)
    with pytest.raises(ClassificationError):
        classify_triad(w((1, 0, 1), BOX), w((1, 0, 0), BOX), w((2, 0, 1), BOX), BOX)


def test_classification_agrees_with_exact_rule_on_cube():
    for k, m, n, cls in enumerate_resonances(CUBE, 0.0, 3).as_tuples():
        assert cls == exact_class(k, m, n)


def test_loose_tolerance_is_reported():
    with pytest.raises(ClassificationError, match="tolerance"):
        enumerate_resonances(BOX, 0.0, 3, tol=0.5)


def test_argument_guards():
    with pytest.raises(ValueError):
        enumerate_resonances(BOX, 0.0, 25)
    with pytest.raises(ValueError):
        enumerate_resonances(BOX, 0.0, 2, tol=0.0)
    with pytest.raises(ValueError):
        enumerate_resonances(BOX, -1.0, 2)


def test_threads_do_not_change_output():
    a = enumerate_resonances(BOX, 0.2, 5, threads=1)
    b = enumerate_resonances(BOX, 0.2, 5, threads=4)
    for name in ("k", "m", "n", "signs", "divisor", "cls"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_divisor_histogram(tmp_path):
    hist = small_divisor_histogram(BOX, 0.0, 3)
    lat = lattice(BOX, 3)
    side = lat.side
    r = np.arange(-3, 4)
    ok = np.abs(r[:, None] + r[None, :]) <= 3
    # all (k, m) with k + m in the cube, minus those where k, m or n vanishes
    pairs = int(ok.sum()) ** 3 - 3 * side**3 + 2
    assert hist.total == pairs
    assert hist.zero_count + int(hist.counts.sum()) == hist.total
    assert hist.zero_count == len(enumerate_resonances(BOX, 0.0, 3))
    p = tmp_path / "h.csv"
    hist.to_csv(p, ["x"])
    rows = [r for r in csv.reader(l for l in p.read_text().splitlines() if not l.startswith("#"))]
    assert rows[0] == ["bin_lo", "bin_hi", "count"] and len(rows) == 41


def test_triads_csv(tmp_path):
    tri = enumerate_resonances(CUBE, 0.0, 1)
    p = tmp_path / "t.csv"
    tri.to_csv(p, ["hdr"])
    body = [l for l in p.read_text().splitlines() if not l.startswith("#")]
    assert len(body) == len(tri) + 1


def test_generic_search_with_control():
    rows = generic_domain_search(uniform_box_sampler(0.6, 1.8), 4, trials=3, seed=1)
    assert rows[-1][:2] == (1.0, 1.0) and rows[-1][2] == 384
    assert [r[2] for r in rows[:-1]] == [0, 0, 0]
    assert rows == generic_domain_search(uniform_box_sampler(0.6, 1.8), 4, trials=3, seed=1)

"""Independent reference implementations used only by the tests.

Resonance on the unit cube at alpha = 0 is decided exactly: every frequency
is ``n3 / sqrt(|n|^2)`` with integer ``|n|^2``, and square roots of distinct
squarefree integers are linearly independent over Q, so a signed sum vanishes
iff each squarefree group has zero rational coefficient.
"""
import itertools
from collections import defaultdict
from fractions import Fraction

import numpy as np


def squarefree_split(N):
    """``N = f^2 r`` with ``r`` squarefree; returns ``(f, r)``."""
    f, r, p = 1, N, 2
    while p * p <= r:
        while r % (p * p) == 0:
            r //= p * p
            f *= p
        p += 1
    return f, r


def omega_surd(n):
    """``omega(n) = n3/|n|`` on the unit cube as ``{r: coeff}`` meaning ``sum coeff sqrt(r)``."""
    N = sum(c * c for c in n)
    if N == 0 or n[2] == 0:
        return {}
    f, r = squarefree_split(N)
    return {r: Fraction(n[2] * f, N)}


def surd_sum_is_zero(parts):
    acc = defaultdict(Fraction)
    for sign, s in parts:
        for r, c in s.items():
            acc[r] += sign * c
    return all(v == 0 for v in acc.values())


def exact_class(k, m, n):
    nk, nm, nn = (sum(c * c for c in v) for v in (k, m, n))
    if k[2] == m[2] == n[2] == 0:
        return "K2D"
    if n[2] == 0 and k[2] == -m[2] != 0 and nk == nm:
        return "K14"
    if k[2] == 0 and m[2] == n[2] != 0 and nm == nn:
        return "K24"
    if m[2] == 0 and k[2] == n[2] != 0 and nk == nn:
        return "K34"
    if k[2] and m[2] and n[2]:
        return "KSTAR"
    raise AssertionError(f"unclassifiable resonance {k} {m} {n}")


def cube_resonances(cutoff):
    """Every resonant ``(k, m, n)`` on the unit cube at alpha = 0, sorted by ``(k, m)``."""
    r = range(-cutoff, cutoff + 1)
    out = []
    for k in itertools.product(r, r, r):
        if k == (0, 0, 0):
            continue
        wk = omega_surd(k)
        for m in itertools.product(r, r, r):
            n = tuple(a + b for a, b in zip(k, m))
            if m == (0, 0, 0) or n == (0, 0, 0) or max(map(abs, n)) > cutoff:
                continue
            wm, wn = omega_surd(m), omega_surd(n)
            if any(surd_sum_is_zero([(1, wk), (sm, wm), (sn, wn)])
                   for sm in (1, -1) for sn in (1, -1)):
                out.append((k, m, n, exact_class(k, m, n)))
    return out


def _helical(vec, kvec):
    """``[(freq_sign, component)]``: helical parts, or the whole vector when ``omega = 0``."""
    if kvec[2] == 0:
        return [(0, vec)]
    c = np.asarray(kvec, float)
    u = c / np.linalg.norm(c)
    K = np.array([[0, -u[2], u[1]], [u[2], 0, -u[0]], [-u[1], u[0], 0]])
    P = np.eye(3) - np.outer(u, u)
    return [(1, 0.5 * (P - 1j * K) @ vec), (-1, 0.5 * (P + 1j * K) @ vec)]


def _out_projectors(nvec):
    c = np.asarray(nvec, float)
    u = c / np.linalg.norm(c)
    P = np.eye(3) - np.outer(u, u)
    if nvec[2] == 0:
        return [(0, P)]
    K = np.array([[0, -u[2], u[1]], [u[2], 0, -u[0]], [-u[1], u[0], 0]])
    return [(1, 0.5 * (P - 1j * K)), (-1, 0.5 * (P + 1j * K))]


def cube_resonant_form(a, b, cutoff):
    """Zero-frequency part of ``-E B_0(E^-1 a, E^-1 b)`` on the unit cube by explicit loops.

    ``a`` and ``b`` are ``(3, L, L, L)`` coefficient arrays.
    """
    r = range(-cutoff, cutoff + 1)
    idx = lambda v: tuple(c + cutoff for c in v)
    out = np.zeros_like(a)
    for k in itertools.product(r, r, r):
        if k == (0, 0, 0):
            continue
        ak = _helical(a[(slice(None),) + idx(k)], k)
        for m in itertools.product(r, r, r):
            n = tuple(x + y for x, y in zip(k, m))
            if m == (0, 0, 0) or n == (0, 0, 0) or max(map(abs, n)) > cutoff:
                continue
            bm = _helical(b[(slice(None),) + idx(m)], m)
            wk, wm, wn = omega_surd(k), omega_surd(m), omega_surd(n)
            for sn, proj in _out_projectors(n):
                for sk, av in ak:
                    for sm, bv in bm:
                        if surd_sum_is_zero([(sn, wn), (-sk, wk), (-sm, wm)]):
                            term = 1j * np.cross(av, np.cross(np.asarray(m, float), bv))
                            out[(slice(None),) + idx(n)] += proj @ term
    return out

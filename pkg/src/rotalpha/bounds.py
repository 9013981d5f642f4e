"""Constant chain and attractor-dimension bound formulas.

Every formula is evaluated as written.  Where a formula and its claimed
limit disagree (the closed form of ``c(alpha)`` diverges as ``alpha -> 0``),
:func:`c_alpha_closed` raises :class:`FormulaDivergence` and reports carry a
``divergence_flag``; the finite limit is only used when ``assume_limit=True``
is requested explicitly.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .field import SpectralField
from .lattice import DomainParams

__all__ = [
    "FormulaDivergence",
    "BoundConstants",
    "BoundReport",
    "rho_V",
    "c_alpha_closed",
    "LatticeSum",
    "c_alpha_lattice",
    "spectrum_2d",
    "lattice_gap_c1",
    "c_of_q",
    "K_alpha",
    "dimension_bounds",
    "length_scale",
    "epsilon_estimate",
    "alpha_sweep",
    "write_report_csv",
]

C_LIMIT = math.sqrt(2.0)
_trapezoid = getattr(np, "trapezoid", None) or np.trapz


class FormulaDivergence(ValueError):
    """A displayed formula is infinite at the requested argument."""


def c_of_q(q: float) -> float:
    """Best constant in ``x^q + y^q >= c (x + y)^q``: ``1`` for ``q <= 1``, else ``2^(1-q)``."""
    if q < 0:
        raise ValueError(f"q must be >= 0, got {q}")
    return 1.0 if q <= 1 else 2.0 ** (1.0 - q)


@dataclass(frozen=True)
class BoundConstants:
    """Absolute constants of the bound chain (unit defaults, all user inputs).

    ``c1`` and ``lambda1`` are lattice quantities; :func:`dimension_bounds`
    fills them from the domain when left as ``None``.
    """

    c_l: float = 1.0
    c_tilde: float = 1.0
    c0: float = 1.0
    K_tilde: float = 1.0
    c1: Optional[float] = None
    lambda1: Optional[float] = None

    def __post_init__(self):
        for name in ("c_l", "c_tilde", "c0", "K_tilde", "c1", "lambda1"):
            val = getattr(self, name)
            if val is not None and not val > 0:
                raise ValueError(f"{name} must be positive, got {val}")

    @property
    def d(self) -> float:
        """``c0 / (4 cbrt(c))`` with ``c = c(5/3) = (1/4)^(1/3)``."""
        return self.c0 / (4.0 * c_of_q(5.0 / 3.0) ** (1.0 / 3.0))


def rho_V(f: SpectralField, nu: float, lambda1: float) -> float:
    """``sqrt(2) |f| / (nu lambda1)``."""
    if not nu > 0:
        raise ValueError(f"nu must be positive, got {nu}")
    if not lambda1 > 0:
        raise ValueError(f"lambda1 must be positive, got {lambda1}")
    norm = math.sqrt(float(np.sum(np.abs(f.coeffs) ** 2)))
    return math.sqrt(2.0) * norm / (nu * lambda1)


def c_alpha_closed(alpha: float, c1: float) -> float:
    """``c(alpha)`` from ``c^2 = 1/(1+a^2 c1) [1/(1+a^2 c1) + 1/(a^2 c1)]``."""
    if c1 <= 0:
        raise ValueError(f"c1 must be positive, got {c1}")
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    if alpha == 0:
        raise FormulaDivergence(
            "c(alpha)^2 contains 1/(alpha^2 c1) and is infinite at alpha = 0; "
            "use assume_limit=True to substitute the stated limit c = sqrt(2)")
    x = alpha * alpha * c1
    return math.sqrt((1.0 / (1.0 + x)) * (1.0 / (1.0 + x) + 1.0 / x))


def spectrum_2d(domain: DomainParams, cutoff: int) -> np.ndarray:
    """Sorted ``k1^2/a1^2 + k2^2/a2^2`` over ``0 < max|k_j| <= cutoff`` (with multiplicity)."""
    r = np.arange(-cutoff, cutoff + 1)
    th1, th2, _ = domain.theta
    vals = th1 * r[:, None] ** 2 + th2 * r[None, :] ** 2
    vals = vals.ravel()
    return np.sort(vals[vals > 0])


def lattice_gap_c1(domain: DomainParams, cutoff: int) -> float:
    """``min_p lambda_p / p`` over the truncated 2-D spectrum."""
    lam = spectrum_2d(domain, cutoff)
    return float(np.min(lam / np.arange(1, lam.size + 1)))


@dataclass(frozen=True)
class LatticeSum:
    """Partial lattice sum ``sum 1/(1 + a^2 |k|^2)^2`` and a bound on the omitted tail."""

    value: float
    tail_bound: float
    cutoff: int

    @property
    def upper(self) -> float:
        return self.value + self.tail_bound


def c_alpha_lattice(domain: DomainParams, alpha: float, cutoff: int) -> LatticeSum:
    """Squared constant ``c_j(alpha)^2`` as a truncated 2-D lattice sum.

    Terms are summed in increasing ``|k|`` order.  Outside the square
    ``max|k_j| <= K`` every point has ``|k|^2 >= theta_min j^2`` on the shell
    ``max|k_j| = j`` of ``8 j`` points, so the tail is at most
    ``int_K^inf 8x/(1 + c x^2)^2 dx = 4 / (c (1 + c K^2))`` with
    ``c = alpha^2 theta_min`` (plus one peak term when ``K`` precedes the
    maximum of the integrand).
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    lam = spectrum_2d(domain, cutoff)
    value = float(np.sum(1.0 / (1.0 + alpha * alpha * lam) ** 2))
    c = alpha * alpha * min(domain.theta[0], domain.theta[1])
    tail = 4.0 / (c * (1.0 + c * cutoff * cutoff))
    peak = 1.0 / math.sqrt(3.0 * c)
    if cutoff < peak:
        tail += 8.0 * peak / (1.0 + c * peak * peak) ** 2
    return LatticeSum(value, tail, cutoff)


def K_alpha(alpha: float, constants: BoundConstants, assume_limit: bool = False,
            c_alpha: Optional[float] = None) -> tuple[float, float]:
    """``(K(alpha), K0)``.

    ``K(alpha) = (c_l/d)^{3/2} (24 c(alpha) + 1)^{3/2} c~^{3/2}`` and
    ``K0 = ((24 sqrt 2 + 1) c_l c~ / d)^{3/2}``.  ``c_alpha`` overrides the
    closed form; ``assume_limit`` substitutes ``c = sqrt(2)``.
    """
    k = constants
    if c_alpha is None:
        if assume_limit:
            c_alpha = C_LIMIT
        else:
            if k.c1 is None:
                raise ValueError("constants.c1 is required to evaluate c(alpha)")
            c_alpha = c_alpha_closed(alpha, k.c1)
    d = k.d
    K = (k.c_l / d) ** 1.5 * (24.0 * c_alpha + 1.0) ** 1.5 * k.c_tilde ** 1.5
    K0 = ((24.0 * C_LIMIT + 1.0) * k.c_l * k.c_tilde / d) ** 1.5
    return K, K0


def length_scale(volume: float, dF: float) -> float:
    """``l = sqrt(|T^3| / d_F)``; infinite when ``d_F = 0``."""
    return math.inf if dF <= 0 else math.sqrt(volume / dF)


@dataclass(frozen=True)
class BoundReport:
    """All quantities of the bound chain for one parameter set.

    ``dH_bound_main`` is ``K (rho_V/nu)^2`` and ``dH_bound_derivation`` is
    ``K (rho_V/nu^2)^3``; both are reported because the two exponent forms
    disagree.  ``dF_bound = 2 dH_bound_main``.
    """

    alpha: float
    nu: float
    rho_V: float
    c1: float
    lambda1: float
    c_alpha_closed: float
    c_alpha_lattice: float
    c_alpha_used: float
    assume_limit: bool
    K_alpha: float
    K0: float
    epsilon: float
    epsilon_source: str
    N_threshold: float
    dH_bound_main: float
    dH_bound_derivation: float
    dH_bound_alpha0: float
    dF_bound: float
    dF_bound_derivation: float
    length_scale: float
    constants: BoundConstants = field(default_factory=BoundConstants)
    divergence_flag: str = ""

    def text(self) -> str:
        lines = [f"{k:>22} = {v}" for k, v in self.rows()]
        return "\n".join(lines)

    def rows(self) -> list:
        out = []
        for k, v in asdict(self).items():
            if k == "constants":
                for ck, cv in v.items():
                    out.append((f"const.{ck}", cv))
            else:
                out.append((k, v))
        return out


def epsilon_estimate(wbar_enstrophy: Sequence[float], times: Sequence[float], nu: float) -> float:
    """Finite-horizon estimate ``nu (1/t) int_0^t ||w_bar||^2 ds`` (trapezoid rule)."""
    y = np.asarray(wbar_enstrophy, dtype=float)
    t = np.asarray(times, dtype=float)
    if t.size < 2 or t[-1] <= t[0]:
        raise ValueError("need at least two increasing times")
    return nu * float(_trapezoid(y, t)) / float(t[-1] - t[0])


def _times(coef: float, x: float) -> float:
    """``coef * x`` with ``inf * 0 = 0`` (an infinite constant times a vanishing load)."""
    return 0.0 if x == 0 else coef * x


def dimension_bounds(alpha: float, nu: float, f: SpectralField,
                     constants: BoundConstants = BoundConstants(),
                     epsilon: Optional[float] = None, assume_limit: bool = False,
                     sum_cutoff: int = 64) -> BoundReport:
    """Evaluate the whole bound chain.

    ``epsilon`` defaults to its upper bound ``c~ rho_V^2``.  At ``alpha = 0``
    without ``assume_limit`` the closed-form constant is infinite; the report
    then carries infinite bounds and a non-empty ``divergence_flag``.  ``c1`` defaults to
    the lattice gap of the 2-D spectrum at ``sum_cutoff`` and ``lambda1`` to
    the smallest ``|n|^2`` of the field's lattice.
    """
    if not nu > 0:
        raise ValueError(f"nu must be positive, got {nu}")
    domain = f.domain
    c1 = constants.c1 if constants.c1 is not None else lattice_gap_c1(domain, sum_cutoff)
    lam1 = constants.lambda1 if constants.lambda1 is not None else f.lattice.lambda1
    k = BoundConstants(constants.c_l, constants.c_tilde, constants.c0, constants.K_tilde,
                       c1, lam1)
    rv = rho_V(f, nu, lam1)
    flag = ""
    try:
        c_closed = c_alpha_closed(alpha, c1)
    except FormulaDivergence as exc:
        c_closed = math.inf
        flag = str(exc)
    c_lat = math.sqrt(c_alpha_lattice(domain, alpha, sum_cutoff).value) if alpha > 0 else math.inf
    c_used = C_LIMIT if assume_limit else c_closed
    K, K0 = K_alpha(alpha, k, c_alpha=c_used)
    if epsilon is None:
        eps, source = k.c_tilde * rv * rv, "upper bound c_tilde*rho_V^2"
    else:
        eps, source = float(epsilon), "finite-horizon estimate"
    if eps < 0:
        raise ValueError("epsilon must be >= 0")
    d = k.d
    n_thr = _times((k.c_l / d) ** 1.5 * (24.0 * c_used + 1.0) ** 1.5, (eps / nu**2) ** 1.5)
    dh_main = _times(K, (rv / nu) ** 2)
    dh_der = _times(K, (rv / nu**2) ** 3)
    dh_0 = k.K_tilde * (rv / nu) ** 1.2
    return BoundReport(alpha=float(alpha), nu=float(nu), rho_V=rv, c1=c1, lambda1=lam1,
                       c_alpha_closed=c_closed, c_alpha_lattice=c_lat, c_alpha_used=c_used,
                       assume_limit=assume_limit, K_alpha=K, K0=K0, epsilon=eps,
                       epsilon_source=source, N_threshold=n_thr, dH_bound_main=dh_main,
                       dH_bound_derivation=dh_der, dH_bound_alpha0=dh_0,
                       dF_bound=2.0 * dh_main, dF_bound_derivation=2.0 * dh_der,
                       length_scale=length_scale(domain.volume, 2.0 * dh_main),
                       constants=k, divergence_flag=flag)


def alpha_sweep(alphas: Sequence[float], nu: float, f: SpectralField,
                constants: BoundConstants = BoundConstants(), epsilon: Optional[float] = None,
                assume_limit: bool = False, sum_cutoff: int = 64) -> list[BoundReport]:
    return [dimension_bounds(a, nu, f, constants, epsilon, assume_limit, sum_cutoff)
            for a in alphas]


def write_report_csv(path, reports: Sequence[BoundReport], header_lines: Sequence[str] = ()) -> None:
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        rows = [r.rows() for r in reports]
        w.writerow([k for k, _ in rows[0]])
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for _, v in r])

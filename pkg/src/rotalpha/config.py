"""Run configuration: TOML parsing, validation and provenance.

Every key has a documented default except ``physics.nu``.  Unknown keys are
rejected and all problems are reported together.
"""
from __future__ import annotations

import hashlib
import math
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Optional

import numpy as np
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import __version__
from .integrator import ForcingMode, SolverConfig
from .lattice import DomainParams, lattice

__all__ = [
    "ConfigError",
    "RunConfig",
    "parse_config",
    "load_config",
    "dump_config",
    "provenance_lines",
]


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("invalid configuration:\n  " + "\n  ".join(errors))
        self.errors = errors


@dataclass(frozen=True)
class DomainSection:
    a2: float = 1.3
    a3: float = 0.7
    a_min: float = 0.1
    a_max: float = 10.0


@dataclass(frozen=True)
class PhysicsSection:
    nu: float = math.nan
    omega: float = 10.0
    alpha: float = 0.2


@dataclass(frozen=True)
class NumericsSection:
    cutoff: int = 4
    dt: float = 1e-3
    t_end: float = 0.1
    scheme: str = "lawson-rk4"
    dealias: bool = True
    checkpoint_every: int = 10


@dataclass(frozen=True)
class ToleranceSection:
    resonance: float = 1e-9
    identity: float = 1e-12
    propagator: float = 1e-12
    divergence: float = 1e-10
    path_agreement: float = 1e-10


@dataclass(frozen=True)
class InitialSection:
    amplitude: float = 1.0
    k0: float = 2.0


@dataclass(frozen=True)
class CompareSection:
    alphas: tuple = (0.4, 0.2, 0.1, 0.05)


@dataclass(frozen=True)
class TraceSection:
    N: int = 0
    every: int = 1


@dataclass(frozen=True)
class BoundsSection:
    c_l: float = 1.0
    c_tilde: float = 1.0
    c0: float = 1.0
    K_tilde: float = 1.0
    c1: float = 0.0
    sum_cutoff: int = 64
    assume_limit: bool = False
    epsilon: float = -1.0
    alphas: tuple = ()


@dataclass(frozen=True)
class VerifySection:
    samples: int = 20


@dataclass(frozen=True)
class RunSection:
    seed: int = 0
    out: str = "out"


SECTIONS = {
    "run": RunSection,
    "domain": DomainSection,
    "physics": PhysicsSection,
    "numerics": NumericsSection,
    "tolerances": ToleranceSection,
    "initial": InitialSection,
    "compare": CompareSection,
    "trace": TraceSection,
    "bounds": BoundsSection,
    "verify": VerifySection,
}


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration.  ``bounds.c1 = 0`` means "compute from the lattice";
    ``bounds.epsilon < 0`` means "use the upper bound ``c~ rho_V^2``"."""

    run: RunSection = field(default_factory=RunSection)
    domain: DomainSection = field(default_factory=DomainSection)
    physics: PhysicsSection = field(default_factory=PhysicsSection)
    numerics: NumericsSection = field(default_factory=NumericsSection)
    tolerances: ToleranceSection = field(default_factory=ToleranceSection)
    initial: InitialSection = field(default_factory=InitialSection)
    forcing: tuple = ()
    compare: CompareSection = field(default_factory=CompareSection)
    trace: TraceSection = field(default_factory=TraceSection)
    bounds: BoundsSection = field(default_factory=BoundsSection)
    verify: VerifySection = field(default_factory=VerifySection)

    def domain_params(self) -> DomainParams:
        d = self.domain
        return DomainParams(a2=d.a2, a3=d.a3, a_min=d.a_min, a_max=d.a_max)

    def solver(self, **overrides) -> SolverConfig:
        n = self.numerics
        cfg = SolverConfig(nu=self.physics.nu, omega_big=self.physics.omega,
                           alpha=self.physics.alpha, cutoff=n.cutoff, dt=n.dt, t_end=n.t_end,
                           domain=self.domain_params(), forcing=self.forcing, scheme=n.scheme,
                           dealias=n.dealias, seed=self.run.seed,
                           checkpoint_every=n.checkpoint_every)
        return replace(cfg, **overrides) if overrides else cfg

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, run=replace(self.run, seed=seed))

    def with_out(self, out: str) -> "RunConfig":
        return replace(self, run=replace(self.run, out=out))

    def to_dict(self) -> dict:
        out: dict[str, Any] = {}
        for name in SECTIONS:
            sec = asdict(getattr(self, name))
            out[name] = {k: list(v) if isinstance(v, tuple) else v for k, v in sec.items()}
        out["forcing"] = [{"n": list(fm.n), "re": [complex(x).real for x in fm.f],
                           "im": [complex(x).imag for x in fm.f]} for fm in self.forcing]
        return out

    def digest(self) -> str:
        """Hash of everything that affects results (the output directory does not)."""
        d = self.to_dict()
        del d["run"]["out"]
        return hashlib.sha256(tomli_w.dumps(d).encode("utf-8")).hexdigest()[:16]


def _coerce(value, default, key, errors):
    """Convert a TOML value to the type of ``default``; record a message on failure."""
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
    elif isinstance(default, int):
        if isinstance(value, int) and not isinstance(value, bool):
            return value
    elif isinstance(default, float):
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
    elif isinstance(default, str):
        if isinstance(value, str):
            return value
    elif isinstance(default, tuple):
        if isinstance(value, list) and all(isinstance(x, (int, float)) and not isinstance(x, bool)
                                           for x in value):
            return tuple(float(x) for x in value)
    errors.append(f"{key}: expected {type(default).__name__}, got {value!r}")
    return default


def _section(cls, raw, name, errors):
    if not isinstance(raw, dict):
        errors.append(f"{name}: expected a table")
        return cls()
    known = {f.name: f for f in fields(cls)}
    kw = {}
    for k, v in raw.items():
        if k not in known:
            errors.append(f"{name}.{k}: unknown key")
            continue
        kw[k] = _coerce(v, getattr(cls(), k), f"{name}.{k}", errors)
    return cls(**kw)


def _forcing(raw, errors) -> tuple:
    if not isinstance(raw, list):
        errors.append("forcing: expected an array of tables")
        return ()
    out = []
    for i, item in enumerate(raw):
        key = f"forcing[{i}]"
        if not isinstance(item, dict):
            errors.append(f"{key}: expected a table")
            continue
        extra = set(item) - {"n", "re", "im"}
        for k in sorted(extra):
            errors.append(f"{key}.{k}: unknown key")
        n = item.get("n")
        re = item.get("re", [0.0, 0.0, 0.0])
        im = item.get("im", [0.0, 0.0, 0.0])
        ok = True
        if not (isinstance(n, list) and len(n) == 3
                and all(isinstance(x, int) and not isinstance(x, bool) for x in n)):
            errors.append(f"{key}.n: expected three integers, got {n!r}")
            ok = False
        for nm, vec in (("re", re), ("im", im)):
            if not (isinstance(vec, list) and len(vec) == 3
                    and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in vec)):
                errors.append(f"{key}.{nm}: expected three numbers, got {vec!r}")
                ok = False
        if ok:
            if n == [0, 0, 0]:
                errors.append(f"{key}.n: the zero mode cannot be forced")
                continue
            out.append(ForcingMode(tuple(n), tuple(complex(a, b) for a, b in zip(re, im))))
    return tuple(out)


def _validate(cfg: RunConfig, errors: list[str]) -> None:
    p, n, d = cfg.physics, cfg.numerics, cfg.domain
    if math.isnan(p.nu):
        errors.append("physics.nu: missing required key")
    elif not p.nu > 0:
        errors.append(f"physics.nu: must be positive, got {p.nu}")
    if p.omega < 0:
        errors.append(f"physics.omega: must be >= 0, got {p.omega}")
    if p.alpha < 0:
        errors.append(f"physics.alpha: must be >= 0, got {p.alpha}")
    if not 0 < d.a_min <= d.a_max:
        errors.append(f"domain: need 0 < a_min <= a_max, got [{d.a_min}, {d.a_max}]")
    else:
        for k in ("a2", "a3"):
            v = getattr(d, k)
            if not d.a_min <= v <= d.a_max:
                errors.append(f"domain.{k}: {v} outside [{d.a_min}, {d.a_max}]")
    if n.cutoff < 1:
        errors.append(f"numerics.cutoff: must be >= 1, got {n.cutoff}")
    if not n.dt > 0:
        errors.append(f"numerics.dt: must be positive, got {n.dt}")
    if n.t_end < 0:
        errors.append(f"numerics.t_end: must be >= 0, got {n.t_end}")
    elif n.dt > 0 and abs(round(n.t_end / n.dt) * n.dt - n.t_end) > 1e-9 * max(1.0, n.t_end):
        errors.append(f"numerics.t_end: {n.t_end} is not a multiple of dt={n.dt}")
    if n.scheme != "lawson-rk4":
        errors.append(f"numerics.scheme: unknown scheme {n.scheme!r}")
    if n.checkpoint_every < 1:
        errors.append("numerics.checkpoint_every: must be >= 1")
    for f in fields(cfg.tolerances):
        if not getattr(cfg.tolerances, f.name) > 0:
            errors.append(f"tolerances.{f.name}: must be positive")
    if cfg.initial.amplitude < 0:
        errors.append("initial.amplitude: must be >= 0")
    if not cfg.initial.k0 > 0:
        errors.append("initial.k0: must be positive")
    if any(a < 0 for a in cfg.compare.alphas):
        errors.append("compare.alphas: must be >= 0")
    if cfg.trace.N < 0 or cfg.trace.every < 1:
        errors.append("trace: need N >= 0 and every >= 1")
    b = cfg.bounds
    for k in ("c_l", "c_tilde", "c0", "K_tilde"):
        if not getattr(b, k) > 0:
            errors.append(f"bounds.{k}: must be positive")
    if b.c1 < 0:
        errors.append("bounds.c1: must be >= 0 (0 = computed)")
    if b.sum_cutoff < 1:
        errors.append("bounds.sum_cutoff: must be >= 1")
    if cfg.verify.samples < 1:
        errors.append("verify.samples: must be >= 1")
    if cfg.run.seed < 0 or cfg.run.seed >= 2**64:
        errors.append("run.seed: must be an unsigned 64-bit integer")
    if any(e.startswith(("domain", "numerics.cutoff")) for e in errors):
        return
    lat = lattice(cfg.domain_params(), n.cutoff)
    for i, fm in enumerate(cfg.forcing):
        if not lat.contains(fm.n):
            errors.append(f"forcing[{i}].n: {fm.n} outside cutoff {n.cutoff}")
            continue
        chk = lat.check[(slice(None),) + lat.index(fm.n)]
        vec = fm.vector()
        if abs(chk @ vec) > 1e-12 * np.linalg.norm(chk) * max(np.linalg.norm(vec), 1e-300):
            errors.append(f"forcing[{i}]: not divergence free (check n . f = {abs(chk @ vec):.3e}); "
                          f"project with f - (check n . f) check n / |check n|^2")


def parse_config(text: str) -> RunConfig:
    """Parse and validate TOML text; raises :class:`ConfigError` listing every problem."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"syntax: {exc}"]) from None
    errors: list[str] = []
    kw = {}
    for key, value in raw.items():
        if key in SECTIONS:
            kw[key] = _section(SECTIONS[key], value, key, errors)
        elif key == "forcing":
            kw[key] = _forcing(value, errors)
        else:
            errors.append(f"{key}: unknown key")
    cfg = RunConfig(**kw)
    _validate(cfg, errors)
    if errors:
        raise ConfigError(errors)
    return cfg


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def dump_config(cfg: RunConfig) -> str:
    return tomli_w.dumps(cfg.to_dict())


def provenance_lines(cfg: RunConfig, command: str, extra: Optional[dict] = None) -> list[str]:
    """Header lines for every output file; independent of the thread count."""
    tol = ", ".join(f"{f.name}={getattr(cfg.tolerances, f.name)!r}"
                    for f in fields(cfg.tolerances))
    lines = [f"rotalpha {__version__} command={command}",
             f"config_sha256={cfg.digest()} seed={cfg.run.seed}",
             f"tolerances: {tol}"]
    for k, v in (extra or {}).items():
        lines.append(f"{k}={v}")
    return lines

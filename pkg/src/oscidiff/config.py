"""Experiment configuration: an INI-style file read with configparser.

Example::

    [equation]
    epsilon = 1e-4, 1e-3, 1e-2
    lambda = 1.0
    x_left = -6
    length = 12
    T = 0.5

    [phase.1]
    kappa = 1.0
    profile = gaussian
    amplitude = 1.0

    [scheme]
    name = wlf

    [discretization]
    h = 0.1, 0.05, 0.025
    tau_rule = min
    gamma = beta

    [chi]
    c = 5

    [reference]
    kind = auto

    [output]
    dir = out
    name = single_phase_lf
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from oscidiff.core import PhaseSet, Profile, constant, gaussian

SCHEMES = (
    "wlf", "wcn",
    "two_phase_case0", "two_phase_case1", "two_phase_case2", "two_phase_case3",
    "multiphase_lf", "multiphase_cn",
    "standard_lf", "standard_cn",
)
TAU_RULES = ("fixed", "h/2", "min")
GAMMA_ARGS = ("beta", "3beta", "max")
REFERENCES = ("auto", "oracle", "mfe", "closed_form")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ProfileSpec:
    kind: str = "gaussian"
    center: float = 0.0
    width: float = 1.0
    amplitude: complex = 1.0
    c: complex = 1.0

    def build(self) -> Profile:
        if self.kind == "gaussian":
            return gaussian(self.center, self.width, self.amplitude)
        if self.kind == "constant":
            return constant(self.c)
        raise ConfigError(f"unknown profile kind {self.kind!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    epsilons: tuple[float, ...]
    hs: tuple[float, ...]
    kappas: tuple[float, ...] = (1.0,)
    profiles: tuple[ProfileSpec, ...] = (ProfileSpec(),)
    lam: float = 1.0
    x_left: float = -6.0
    length: float = 12.0
    T: float = 0.5
    scheme: str = "wlf"
    tau_rule: str = "min"
    tau: float | None = None
    gamma: str = "beta"
    c_chi: float = 5.0
    reference: str = "auto"
    out_dir: str = "out"
    name: str = "run"
    enforce_stability: bool = True
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.epsilons or not self.hs:
            raise ConfigError("epsilon and h lists must be nonempty")
        if any(e <= 0 for e in self.epsilons) or any(h <= 0 for h in self.hs):
            raise ConfigError("epsilon and h must be positive")
        if len(self.kappas) != len(self.profiles) or not self.kappas:
            raise ConfigError("one profile per phase is required")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; choose from {', '.join(SCHEMES)}")
        if self.tau_rule not in TAU_RULES:
            raise ConfigError(f"unknown tau rule {self.tau_rule!r}")
        if self.tau_rule == "fixed" and not (self.tau and self.tau > 0):
            raise ConfigError("tau_rule = fixed needs a positive tau")
        if self.gamma not in GAMMA_ARGS:
            raise ConfigError(f"unknown gamma selector {self.gamma!r}")
        if self.reference not in REFERENCES:
            raise ConfigError(f"unknown reference {self.reference!r}")
        if self.scheme in ("wlf", "wcn") and len(self.kappas) != 1:
            raise ConfigError("single-phase schemes need exactly one phase")
        if not self.T > 0 or not self.length > 0:
            raise ConfigError("T and the period must be positive")

    @property
    def is_leapfrog(self) -> bool:
        return self.scheme in ("wlf", "standard_lf", "multiphase_lf") or self.scheme.startswith("two_phase")

    def phase_set(self) -> PhaseSet:
        return PhaseSet(self.kappas, tuple(p.build() for p in self.profiles))


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


def _complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError as exc:
        raise ConfigError(f"bad number {text!r}") from exc


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc

    def get(section, key, default=None):
        if cp.has_option(section, key):
            return cp.get(section, key).strip()
        return default

    if not cp.has_section("equation") or not cp.has_option("equation", "epsilon"):
        raise ConfigError("[equation] epsilon is required")
    if not cp.has_option("discretization", "h"):
        raise ConfigError("[discretization] h is required")

    phase_sections = sorted((s for s in cp.sections() if s.startswith("phase.")),
                            key=lambda s: s.split(".", 1)[1])
    kappas, profiles = [], []
    for s in phase_sections:
        try:
            kappas.append(float(get(s, "kappa", "1")))
            profiles.append(ProfileSpec(
                kind=get(s, "profile", "gaussian"),
                center=float(get(s, "center", "0")),
                width=float(get(s, "width", "1")),
                amplitude=_complex(get(s, "amplitude", "1")),
                c=_complex(get(s, "c", "1")),
            ))
        except ValueError as exc:
            raise ConfigError(f"bad entry in [{s}]: {exc}") from exc
    if not kappas:
        kappas, profiles = [1.0], [ProfileSpec()]

    tau = get("discretization", "tau")
    try:
        return ExperimentConfig(
            epsilons=_floats(get("equation", "epsilon")),
            hs=_floats(get("discretization", "h")),
            kappas=tuple(kappas),
            profiles=tuple(profiles),
            lam=float(get("equation", "lambda", "1")),
            x_left=float(get("equation", "x_left", "-6")),
            length=float(get("equation", "length", "12")),
            T=float(get("equation", "T", "0.5")),
            scheme=get("scheme", "name", "wlf"),
            tau_rule=get("discretization", "tau_rule", "min"),
            tau=float(tau) if tau else None,
            gamma=get("discretization", "gamma", "beta"),
            c_chi=float(get("chi", "c", "5")),
            reference=get("reference", "kind", "auto"),
            out_dir=get("output", "dir", "out"),
            name=get("output", "name", "run"),
            enforce_stability=get("scheme", "enforce_stability", "true").lower() in ("1", "true", "yes"),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def logspace(lo: float, hi: float, n: int) -> tuple[float, ...]:
    return tuple(float(v) for v in np.logspace(np.log10(lo), np.log10(hi), n))

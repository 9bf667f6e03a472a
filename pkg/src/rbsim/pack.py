"""Electrical parameterization of the reconfigurable battery string.

A pack is N half-bridge modules in series. Each module is a constant-EMF
battery behind a series resistance; an inserted module adds its terminal
voltage to the string, a bypassed one leaves only a switch on-resistance in
the path. The pack also carries the buck filter, the coupling/output
capacitors, and the isolation-transformer parameters of the auxiliary port.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

from .errors import ConfigurationError


@dataclass(frozen=True)
class ModuleParams:
    """One battery module: EMF source plus series resistances.

    v_oc   open-circuit voltage of the module [V]
    r_bt   internal battery resistance [ohm]
    r_ds   switch on-resistance [ohm]
    r_d    switch body-diode resistance [ohm] (kept for completeness)
    """

    v_oc: float
    r_bt: float
    r_ds: float
    r_d: float = 0.001


class LoadKind(str, Enum):
    RESISTIVE = "resistive"
    CONSTANT_POWER = "constant_power"


@dataclass(frozen=True)
class LoadSpec:
    """A port load: either a resistance [ohm] or a constant power draw [W]."""

    kind: LoadKind
    value: float

    def __post_init__(self):
        if self.value <= 0:
            raise ConfigurationError(f"load value must be > 0, got {self.value}")

    def current(self, v: float) -> float:
        """Load current at port voltage v."""
        if self.kind is LoadKind.RESISTIVE:
            return v / self.value
        return self.value / v

    def resistance_at(self, v: float) -> float:
        """Equivalent resistance at operating voltage v."""
        if self.kind is LoadKind.RESISTIVE:
            return self.value
        return v * v / self.value

    @staticmethod
    def resistive(ohms: float) -> "LoadSpec":
        return LoadSpec(LoadKind.RESISTIVE, ohms)

    @staticmethod
    def constant_power(watts: float) -> "LoadSpec":
        return LoadSpec(LoadKind.CONSTANT_POWER, watts)


@dataclass(frozen=True)
class PackConfig:
    """Full electrical parameterization of the dual-port pack.

    Field names match the JSON configuration schema one-to-one; SI units only.

    n_modules  module count N (>= 2); one module is always inserted
    f_sw       per-carrier switching frequency [Hz]
    l_dc       buck inductor [H], r_ldc its series resistance [ohm]
    c_dc1      dc-link capacitor [F]
    c_dc2      series coupling capacitor of the auxiliary port [F]
    c_dc3      auxiliary output capacitor [F]
    turns_ratio  transformer secondary/primary winding ratio
    r_l1, r_l2   transformer winding resistances, primary/secondary [ohm]
    r_cdc2     coupling-capacitor ESR [ohm]
    v_fd, r_fd   rectifier-diode forward drop [V] and resistance [ohm]
    modules    per-module parameters, length n_modules
    l_mag      transformer magnetizing inductance seen from the primary [H];
               carries the primary loop current between rectifier conduction
               intervals and restores the coupling-capacitor charge balance
    aux_string_coupling  when False the auxiliary port draws no current from
               the switched string node, decoupling the two ports exactly as
               the closed-form model assumes
    """

    n_modules: int
    f_sw: float
    l_dc: float
    r_ldc: float
    c_dc1: float
    c_dc2: float
    c_dc3: float
    turns_ratio: float
    r_l1: float
    r_l2: float
    r_cdc2: float
    v_fd: float
    r_fd: float
    modules: tuple[ModuleParams, ...]
    l_mag: float = 1e-3
    aux_string_coupling: bool = True

    def __post_init__(self):
        if not isinstance(self.modules, tuple):
            object.__setattr__(self, "modules", tuple(self.modules))

    @property
    def r_eq1(self) -> float:
        """Primary-side series resistance: capacitor ESR plus primary winding."""
        return self.r_cdc2 + self.r_l1

    @property
    def r_eq2(self) -> float:
        """Secondary-side series resistance: secondary winding plus two diodes."""
        return self.r_l2 + 2.0 * self.r_fd

    @property
    def effective_switching_frequency(self) -> float:
        """Pulse rate of the string waveform: (N-1) interleaved carriers."""
        return (self.n_modules - 1) * self.f_sw

    @property
    def mean_v_oc(self) -> float:
        return sum(p.v_oc for p in self.modules) / len(self.modules)

    @property
    def mean_insert_resistance(self) -> float:
        """Average series resistance contributed by one inserted module."""
        return sum(p.r_bt + p.r_ds for p in self.modules) / len(self.modules)

    def with_modules(self, modules: Sequence[ModuleParams]) -> "PackConfig":
        return replace(self, modules=tuple(modules), n_modules=len(modules))


def module_terminal_voltage(p: ModuleParams, i: float) -> float:
    """Terminal voltage of an inserted module carrying string current i.

    The conducting high-side switch is in the path, so its on-resistance
    adds to the battery's internal resistance.
    """
    return p.v_oc - (p.r_bt + p.r_ds) * i


def string_voltage(config: PackConfig, inserted: Sequence[bool], i: float) -> float:
    """Series string voltage for a given insert/bypass pattern at current i.

    Bypassed modules contribute one switch on-resistance of path drop
    (low-side switch conducting).
    """
    if len(inserted) != config.n_modules:
        raise ConfigurationError(
            f"pattern length {len(inserted)} != n_modules {config.n_modules}"
        )
    v = 0.0
    for p, ins in zip(config.modules, inserted):
        if ins:
            v += p.v_oc - (p.r_bt + p.r_ds) * i
        else:
            v -= p.r_ds * i
    return v


def string_emf_and_resistance(
    config: PackConfig, inserted: Sequence[bool]
) -> tuple[float, float]:
    """Decompose the string into (EMF sum, series resistance) for a pattern.

    string_voltage(config, inserted, i) == emf - resistance * i, exactly.
    """
    emf = 0.0
    r = 0.0
    for p, ins in zip(config.modules, inserted):
        if ins:
            emf += p.v_oc
            r += p.r_bt + p.r_ds
        else:
            r += p.r_ds
    return emf, r


@dataclass(frozen=True)
class ValidationIssue:
    severity: str  # "error" | "warning"
    field: str
    message: str


def validate_config(config: PackConfig, design=None) -> list[ValidationIssue]:
    """Check every structural invariant; returns issues instead of raising.

    When design inputs are supplied, additionally warns if the configured
    transformer ratio falls outside the practical sizing bounds.
    """
    issues: list[ValidationIssue] = []

    def err(field_, msg):
        issues.append(ValidationIssue("error", field_, msg))

    def warn(field_, msg):
        issues.append(ValidationIssue("warning", field_, msg))

    if config.n_modules < 2:
        err("n_modules", f"need >=2 modules, got {config.n_modules}")
    if len(config.modules) != config.n_modules:
        err("modules", f"got {len(config.modules)} module entries for n_modules={config.n_modules}")
    if config.f_sw <= 0:
        err("f_sw", "carrier frequency must be > 0")
    if config.turns_ratio <= 0:
        err("turns_ratio", "turns ratio must be > 0")
    for name in ("l_dc", "c_dc1", "c_dc2", "c_dc3", "l_mag"):
        if getattr(config, name) <= 0:
            err(name, f"{name} must be > 0")
    for name in ("r_ldc", "r_l1", "r_l2", "r_cdc2", "r_fd", "v_fd"):
        if getattr(config, name) < 0:
            err(name, f"{name} must be >= 0")
    for idx, p in enumerate(config.modules):
        if p.v_oc <= 0:
            err(f"modules[{idx}].v_oc", "open-circuit voltage must be > 0")
        for rname in ("r_bt", "r_ds", "r_d"):
            if getattr(p, rname) < 0:
                err(f"modules[{idx}].{rname}", "resistance must be >= 0")

    if design is not None and not issues:
        from .design import turns_ratio_bounds

        try:
            lo, hi = turns_ratio_bounds(design, practical=True)
        except Exception as e:  # infeasible bounds are reported, not raised
            warn("turns_ratio", f"sizing bounds not computable: {e}")
        else:
            if not lo <= config.turns_ratio <= hi:
                warn(
                    "turns_ratio",
                    f"{config.turns_ratio:.4g} outside practical bounds "
                    f"[{lo:.4g}, {hi:.4g}]",
                )
    return issues

"""Phase-shifted-carrier modulation for the module string.

One module is hard-wired inserted; the remaining N-1 switch-sets each compare
a common modulation index m against their own phase-offset triangular
carrier. The interleaved result is a one-module-tall pulse train riding on a
dc base level, with an effective pulse rate of (N-1) times the per-carrier
frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigurationError
from .pack import PackConfig


@dataclass(frozen=True)
class ModulationCommand:
    """Universal modulation index, 0 <= m <= 1."""

    m: float

    def __post_init__(self):
        if not 0.0 <= self.m <= 1.0:
            raise ConfigurationError(f"modulation index must be in [0, 1], got {self.m}")


@dataclass(frozen=True)
class SwitchPattern:
    """Insert/bypass state of every module at one instant.

    inserted[0] is the permanently inserted base module.
    """

    inserted: tuple[bool, ...]
    timestamp: float

    @property
    def count(self) -> int:
        return sum(self.inserted)


def carrier_value(k: int, t: float, f_sw: float, n: int) -> float:
    """Triangular carrier k of n-1, range [0, 1], period 1/f_sw.

    Carrier k leads carrier 0 by k/((n-1)*f_sw); all carriers start at their
    minimum at t = 0.
    """
    if n < 2:
        raise ConfigurationError(f"need n >= 2, got {n}")
    if not 0 <= k < n - 1:
        raise ConfigurationError(f"carrier index {k} out of range [0, {n - 2}]")
    u = t * f_sw + k / (n - 1)
    u -= math.floor(u)
    return 2.0 * u if u <= 0.5 else 2.0 * (1.0 - u)


def inserted_tuple(m: float, t: float, f_sw: float, n: int) -> tuple[bool, ...]:
    """Comparator kernel shared by switch_pattern and the simulator.

    Module k+1 is inserted iff m strictly exceeds carrier k, so m = 0 keeps
    exactly one module inserted with no chatter. m = 1 must keep every module
    inserted even at the instants where a carrier touches 1.0.
    """
    if m >= 1.0:
        return (True,) * n
    states = [True]
    base = t * f_sw
    for k in range(n - 1):
        u = base + k / (n - 1)
        u -= math.floor(u)
        c = 2.0 * u if u <= 0.5 else 2.0 * (1.0 - u)
        states.append(m > c)
    return tuple(states)


def switch_pattern(cmd: ModulationCommand | float, t: float, config: PackConfig) -> SwitchPattern:
    """Evaluate all carriers at time t and return the resulting pattern."""
    m = cmd.m if isinstance(cmd, ModulationCommand) else float(cmd)
    return SwitchPattern(
        inserted=inserted_tuple(m, t, config.f_sw, config.n_modules),
        timestamp=t,
    )


def effective_duty(m: float, n: int) -> float:
    """Duty cycle of the pulse component: fractional part of m*(n-1)."""
    x = m * (n - 1)
    return x - math.floor(x)


def base_level(m: float, n: int) -> int:
    """Number of modules inserted during the low phase of the pulse train."""
    return int(math.floor(m * (n - 1))) + 1


def average_dc_link(m: float, n: int, v_m: float) -> float:
    """Time-averaged string voltage: (1 + m*(n-1)) * v_m."""
    return (1.0 + m * (n - 1)) * v_m

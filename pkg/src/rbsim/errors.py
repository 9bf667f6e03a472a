"""Exception types shared across the package."""

from __future__ import annotations


class ConfigurationError(ValueError):
    """A parameter set violates a structural requirement (wrong length, sign, range)."""


class InfeasibleDesignError(ValueError):
    """The sizing rules admit no solution (e.g. transformer-ratio bounds cross)."""


class UnreachableTargetError(ValueError):
    """A requested auxiliary voltage lies outside the achievable gain band.

    Carries the achievable band so callers can report or clamp.
    """

    def __init__(self, target: float, band: tuple[float, float]):
        self.target = target
        self.band = band
        super().__init__(
            f"target {target:.6g} V outside achievable band "
            f"[{band[0]:.6g}, {band[1]:.6g}] V"
        )


class SimulationFault(RuntimeError):
    """The simulator hit a guard condition; carries the simulation timestamp."""

    def __init__(self, message: str, t: float):
        self.t = t
        super().__init__(f"{message} (at t={t:.9g} s)")


class MetricsWindowError(ValueError):
    """A metrics window spans a reference/load step, so the metrics are undefined."""

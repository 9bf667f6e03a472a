"""Closed-form steady-state model of the isolated auxiliary port.

The string waveform splits into a dc base level plus a one-module-tall pulse
train. The series coupling capacitor strips the dc component, so the
transformer primary sees a positive pulse of weight (1-D) and a negative
pulse of weight D. The rectifier conducts only during the larger pulse; all
series parasitics referred to the load over that conduction interval give a
dimensionless equivalent resistance that sets the deviation from the ideal
gain.

For every output voltage inside the achievable band there are two duty
solutions, one on each side of D = 0.5; both are returned by invert_gain so
the controller can exploit the redundancy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from .errors import ConfigurationError, UnreachableTargetError
from .modulation import average_dc_link, base_level, effective_duty
from .pack import LoadKind, LoadSpec, PackConfig

_SOLVE_TOL = 1e-9
_MAX_FIXED_POINT_ITER = 50


class GainBranch(str, Enum):
    LOW = "low"  # D <= 0.5, rectifier conducts during the positive pulse
    HIGH = "high"  # D > 0.5, rectifier conducts during the negative pulse


class Fidelity(str, Enum):
    IDEAL = "ideal"  # neglect diode drops and coupling-capacitor ripple
    FULL = "full"


@dataclass(frozen=True)
class AuxParams:
    """Parameters of the auxiliary-port steady-state model.

    r_eq1 lumps the coupling-capacitor ESR with the primary winding
    resistance; r_eq2 lumps the secondary winding with two conducting
    rectifier diodes. delta_vr is the assumed peak-to-peak coupling-capacitor
    ripple used by the full-fidelity pulse amplitudes.
    """

    turns_ratio: float
    r_eq1: float
    r_eq2: float
    v_fd: float
    r_load: float
    delta_vr: float = 0.0

    def __post_init__(self):
        if self.turns_ratio <= 0:
            raise ConfigurationError("turns_ratio must be > 0")
        if self.r_load <= 0:
            raise ConfigurationError("r_load must be > 0")
        if self.delta_vr < 0:
            raise ConfigurationError("delta_vr must be >= 0")

    @property
    def loop_resistance(self) -> float:
        """All series resistance referred to the secondary [ohm]."""
        return self.turns_ratio**2 * self.r_eq1 + self.r_eq2

    @staticmethod
    def from_pack(
        pack: PackConfig,
        load: LoadSpec | float,
        delta_vr: float = 0.0,
        v_guess: float | None = None,
        extra_primary_resistance: float = 0.0,
    ) -> "AuxParams":
        """Assemble model parameters from a pack configuration and a load.

        Constant-power loads are linearized at v_guess. extra_primary_resistance
        folds additional series resistance (e.g. the switched-string path when
        the ports are coupled) into the primary side.
        """
        if isinstance(load, (int, float)):
            r_load = float(load)
        elif load.kind is LoadKind.RESISTIVE:
            r_load = load.value
        else:
            if v_guess is None:
                raise ConfigurationError("constant-power load needs v_guess")
            r_load = v_guess * v_guess / load.value
        return AuxParams(
            turns_ratio=pack.turns_ratio,
            r_eq1=pack.r_eq1 + extra_primary_resistance,
            r_eq2=pack.r_eq2,
            v_fd=pack.v_fd,
            r_load=r_load,
            delta_vr=delta_vr,
        )


@dataclass(frozen=True)
class SteadyStateSolution:
    """Closed-form operating point for one modulation index."""

    d: float
    v_base: float
    v_p_plus: float
    v_p_minus: float
    r_eq: float
    v_dc1: float
    v_dc2: float


def pulse_voltages(d: float, v_m: float, delta_vr: float) -> tuple[float, float]:
    """Positive and negative pulse amplitudes seen by the transformer primary.

    The negative pulse is returned signed (negative).
    """
    if not 0.0 <= d < 1.0:
        raise ConfigurationError(f"duty must be in [0, 1), got {d}")
    if delta_vr >= v_m:
        raise ConfigurationError(
            f"coupling ripple {delta_vr} V exceeds module voltage {v_m} V"
        )
    swing = v_m - delta_vr
    return (1.0 - d) * swing, -d * swing


def equivalent_resistance(d: float, branch: GainBranch, p: AuxParams) -> float:
    """Dimensionless lumped parasitic ratio over the conduction interval.

    The conduction interval shrinks with the duty of the larger pulse, so the
    referred resistance scales with 1/D on the low branch and 1/(1-D) on the
    high branch.
    """
    if branch is GainBranch.LOW:
        if d <= 0.0:
            raise ConfigurationError("low branch needs d > 0 (no conduction interval at d=0)")
        frac = d
    else:
        if d >= 1.0:
            raise ConfigurationError("high branch needs d < 1 (no conduction interval at d=1)")
        frac = 1.0 - d
    return p.loop_resistance / (frac * p.r_load)


def _branch_of(d: float) -> GainBranch:
    return GainBranch.LOW if d <= 0.5 else GainBranch.HIGH


def _gain_coefficients(v_m: float, p: AuxParams, fidelity: Fidelity) -> tuple[float, float]:
    """(A, B) such that v_dc2 * (1 + R_eq) = A * w - B, w = larger-pulse weight."""
    if fidelity is Fidelity.FULL:
        return p.turns_ratio * (v_m - p.delta_vr), 2.0 * p.v_fd
    return p.turns_ratio * v_m, 0.0


def aux_output_voltage(
    d: float, v_m: float, p: AuxParams, fidelity: Fidelity = Fidelity.FULL
) -> float:
    """Steady-state auxiliary output voltage at duty d.

    Uses the larger-pulse weight (1-d) below the branch split and d above it;
    ideal fidelity drops the diode drops and coupling-ripple terms but keeps
    the parasitic-resistance divider.
    """
    if not 0.0 < d < 1.0:
        raise ConfigurationError(f"duty must be in (0, 1), got {d}")
    if fidelity is Fidelity.FULL and p.delta_vr >= v_m:
        raise ConfigurationError(
            f"coupling ripple {p.delta_vr} V exceeds module voltage {v_m} V"
        )
    branch = _branch_of(d)
    w = 1.0 - d if branch is GainBranch.LOW else d
    a_coef, b_coef = _gain_coefficients(v_m, p, fidelity)
    r_eq = equivalent_resistance(d, branch, p)
    return (a_coef * w - b_coef) / (1.0 + r_eq)


def aux_output_voltage_constant_power(
    d: float,
    v_m: float,
    p: AuxParams,
    power: float,
    fidelity: Fidelity = Fidelity.FULL,
) -> float:
    """Output voltage with a constant-power load, by fixed-point iteration.

    The load term of the equivalent resistance depends on the solution
    voltage, so the resistive formula is iterated with r_load = v**2 / P.
    """
    v = aux_output_voltage(d, v_m, p, fidelity)  # seed from the given r_load
    for _ in range(_MAX_FIXED_POINT_ITER):
        p_eff = replace(p, r_load=v * v / power)
        v_next = aux_output_voltage(d, v_m, p_eff, fidelity)
        if abs(v_next - v) <= _SOLVE_TOL:
            return v_next
        v = v_next
    return v


def gain_band(v_m: float, p: AuxParams, fidelity: Fidelity = Fidelity.FULL) -> tuple[float, float]:
    """Achievable output band [gain at d=0.5, maximum gain over d].

    With parasitics the gain collapses toward the duty extremes, so the
    maximum sits at an interior peak duty rather than at the endpoints.
    """
    a_coef, b_coef = _gain_coefficients(v_m, p, fidelity)
    v_min = aux_output_voltage(0.5, v_m, p, fidelity)
    eps = p.loop_resistance / p.r_load
    if eps == 0.0:
        return v_min, a_coef - b_coef  # open supremum as d -> 0
    c_coef = a_coef - b_coef
    d_peak = -eps + math.sqrt(eps * eps + c_coef * eps / a_coef)
    if d_peak >= 0.5 or d_peak <= 0.0:
        return v_min, v_min
    return v_min, aux_output_voltage(d_peak, v_m, p, fidelity)


def invert_gain(
    v_dc2_target: float,
    v_m: float,
    p: AuxParams,
    fidelity: Fidelity = Fidelity.FULL,
) -> tuple[float, float]:
    """Both duty solutions whose output equals the target.

    Substituting the load current into the gain relation gives a quadratic in
    d on the low branch:

        A*d**2 - (A - B - V)*d + V*eps = 0,   eps = loop_resistance / r_load

    whose larger root is the solution on the usable monotone segment next to
    d = 0.5; the high-branch solution is its mirror 1 - d. Raises
    UnreachableTargetError (carrying the achievable band) for targets outside
    the band.
    """
    band = gain_band(v_m, p, fidelity)
    v = v_dc2_target
    tol = _SOLVE_TOL * max(1.0, abs(v))
    if not band[0] - tol <= v <= band[1] + tol:
        raise UnreachableTargetError(v, band)

    a_coef, b_coef = _gain_coefficients(v_m, p, fidelity)
    eps = p.loop_resistance / p.r_load
    lin = a_coef - b_coef - v
    if eps == 0.0:
        d_low = 1.0 - (v + b_coef) / a_coef
    else:
        disc = lin * lin - 4.0 * a_coef * v * eps
        if disc < 0.0:
            disc = 0.0  # target at the band maximum up to rounding
        d_low = (lin + math.sqrt(disc)) / (2.0 * a_coef)
    d_low = min(max(d_low, 0.0), 0.5)
    return d_low, 1.0 - d_low


def coupling_ripple_estimate(p_aux: float, c: float, v: float, f_eff: float) -> float:
    """Charge-balance estimate of the coupling-capacitor ripple [V].

    One effective switching period moves the full load charge through the
    series capacitor: delta_v = P / (f_eff * C * V).
    """
    return p_aux / (f_eff * c * v)


def solve_operating_point(
    m: float,
    n: int,
    v_m: float,
    p: AuxParams,
    fidelity: Fidelity = Fidelity.FULL,
) -> SteadyStateSolution:
    """Full closed-form operating point for modulation index m.

    At integer m*(n-1) the pulse train degenerates to a constant level: no
    energy reaches the auxiliary port (v_dc2 = 0, r_eq = inf).
    """
    d = effective_duty(m, n)
    v_base = base_level(m, n) * v_m
    v_dc1 = average_dc_link(m, n, v_m)
    delta = p.delta_vr if fidelity is Fidelity.FULL else 0.0
    vp, vn = pulse_voltages(d, v_m, delta)
    if d == 0.0:
        return SteadyStateSolution(d, v_base, vp, vn, math.inf, v_dc1, 0.0)
    return SteadyStateSolution(
        d=d,
        v_base=v_base,
        v_p_plus=vp,
        v_p_minus=vn,
        r_eq=equivalent_resistance(d, _branch_of(d), p),
        v_dc1=v_dc1,
        v_dc2=aux_output_voltage(d, v_m, p, fidelity),
    )

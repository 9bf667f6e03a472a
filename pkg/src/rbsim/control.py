"""Dual-objective controller reconciling the two ports.

The isolated output fixes the required pulse duty; every modulation index
whose duty equals that value or its mirror produces the same auxiliary
voltage but a different dc-link level, so the controller enumerates all of
them and picks the one closest to the dc-link reference. A PI loop with a
dead-band on its input trims the duty command against model error without
chattering between candidates.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .analytics import AuxParams, Fidelity, invert_gain
from .errors import ConfigurationError, UnreachableTargetError
from .modulation import ModulationCommand, average_dc_link, effective_duty
from .pack import PackConfig

_DEDUP_TOL = 1e-12


@dataclass(frozen=True)
class ControlRefs:
    """References for both ports; the dc-link value comes from higher-level
    loops, the auxiliary value is the rated bus voltage (or 0 when off)."""

    v_dc1_ref: float
    v_dc2_ref: float


@dataclass(frozen=True)
class Measurements:
    """Feedback available to the controller at one control instant."""

    v_dc2: float  # isolated auxiliary feedback [V]
    v_m_bar: float  # average operating voltage of the modules [V]
    v_dc1: float = 0.0  # monitoring only


@dataclass
class ControlState:
    """Mutable controller state; single-owner, one mutator (control_step)."""

    kp: float = 0.02  # duty per volt
    ki: float = 2.0  # duty per volt-second
    hys_band: float = 0.06  # dead-band on the auxiliary error [V]
    anti_windup_limit: float = 0.25  # cap on the integral term [duty]
    duty_min: float = 0.05
    duty_max: float = 0.95
    integrator: float = 0.0  # accumulated error [V*s]
    hysteresis_active: bool = False
    d_star: float = 0.5
    m_selected: float = 0.0
    aux_unreachable: bool = False
    dc_link_saturated: bool = False


def feedforward_duty(
    refs: ControlRefs,
    v_m_bar: float,
    p: AuxParams,
    fidelity: Fidelity = Fidelity.FULL,
) -> float:
    """Duty command from the gain model alone (canonical low branch).

    Either branch would do: the candidate enumeration is symmetric in
    d <-> 1-d, so the same modulation indices appear downstream.
    """
    return invert_gain(refs.v_dc2_ref, v_m_bar, p, fidelity)[0]


def candidate_modulation_indices(d_star: float, n: int) -> list[float]:
    """All modulation indices whose pulse duty is d_star or 1 - d_star.

    There are 2*(n-1) of them, collapsing to n-1 at d_star = 0.5; returned
    sorted ascending.
    """
    if not 0.0 < d_star < 1.0:
        raise ConfigurationError(f"d_star must be in (0, 1), got {d_star}")
    raw = []
    for k in range(n - 1):
        raw.append((k + d_star) / (n - 1))
        raw.append((k + 1.0 - d_star) / (n - 1))
    raw = [m for m in raw if 0.0 <= m <= 1.0]
    raw.sort()
    out: list[float] = []
    for m in raw:
        if not out or m - out[-1] > _DEDUP_TOL:
            out.append(m)
    return out


def select_modulation_index(
    cands: list[float], v_dc1_ref: float, v_m_bar: float, n: int
) -> float:
    """Candidate whose dc-link average is closest to the reference.

    Ties break toward the smaller modulation index (the lower dc-link level).
    """
    if not cands:
        raise ConfigurationError("empty candidate list")
    return min(cands, key=lambda m: (abs(average_dc_link(m, n, v_m_bar) - v_dc1_ref), m))


def pi_step(state: ControlState, error: float, dt: float) -> float:
    """One PI update on the auxiliary-voltage error; returns the duty correction.

    Errors inside the dead-band are treated as zero and freeze the
    integrator; the integral term is clamped to the anti-windup limit.
    Mutates state in place.
    """
    if dt <= 0:
        raise ConfigurationError(f"dt must be > 0, got {dt}")
    in_band = abs(error) <= state.hys_band
    state.hysteresis_active = in_band
    if in_band:
        return state.ki * state.integrator
    state.integrator += error * dt
    if state.ki > 0.0:
        lim = state.anti_windup_limit / state.ki
        state.integrator = min(max(state.integrator, -lim), lim)
    return state.kp * error + state.ki * state.integrator


def control_step(
    meas: Measurements,
    refs: ControlRefs,
    state: ControlState,
    pack: PackConfig,
    aux: AuxParams,
    dt: float,
) -> tuple[ModulationCommand, ControlState]:
    """One pass of the full pipeline; returns the command and the next state.

    The auxiliary output falls as the low-branch duty rises, so a positive
    PI correction (output too low) is subtracted from the feedforward duty.
    A zero (or negative) v_dc2_ref means the auxiliary port is off: the duty
    is unconstrained and the dc-link reference is matched exactly. An
    unreachable auxiliary target holds the previous command and raises the
    flag; a dc-link reference outside the candidate range selects the
    boundary candidate and flags saturation.
    """
    n = pack.n_modules
    new = replace(state)

    if refs.v_dc2_ref <= 0.0:
        x = (refs.v_dc1_ref / meas.v_m_bar - 1.0) / (n - 1)
        m = min(max(x, 0.0), 1.0)
        new.dc_link_saturated = not 0.0 <= x <= 1.0
        new.aux_unreachable = False
        new.hysteresis_active = False
        new.m_selected = m
        new.d_star = effective_duty(m, n)
        return ModulationCommand(m), new

    try:
        d_ff = feedforward_duty(refs, meas.v_m_bar, aux)
    except UnreachableTargetError:
        new.aux_unreachable = True
        return ModulationCommand(new.m_selected), new

    correction = pi_step(new, refs.v_dc2_ref - meas.v_dc2, dt)
    d_star = min(max(d_ff - correction, new.duty_min), new.duty_max)
    cands = candidate_modulation_indices(d_star, n)
    m = select_modulation_index(cands, refs.v_dc1_ref, meas.v_m_bar, n)

    levels = [average_dc_link(c, n, meas.v_m_bar) for c in cands]
    new.dc_link_saturated = not levels[0] <= refs.v_dc1_ref <= levels[-1]
    new.aux_unreachable = False
    new.d_star = d_star
    new.m_selected = m
    return ModulationCommand(m), new

"""Component-sizing rules: transformer ratio, capacitors, dc-link granularity.

The transformer ratio window comes from requiring the auxiliary target to be
reachable across the whole module-voltage operating range while keeping the
duty inside a usable margin; its upper bound places the nominal operating
point near D = 0.5, which maximizes the controllable range, so that bound is
the recommendation. Capacitor minimums follow from charge balance over one
effective switching period at maximum auxiliary power.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import ConfigurationError, InfeasibleDesignError


class SizingFrequency(str, Enum):
    """Which frequency the capacitor rules use for the per-period charge.

    The (n-1) interleaving factor appears explicitly in the formulas, so the
    remaining frequency symbol is read as the per-carrier rate by default;
    the effective-rate interpretation is kept for sensitivity studies.
    """

    PER_CARRIER = "per_carrier"
    EFFECTIVE = "effective"


@dataclass(frozen=True)
class DesignInputs:
    v_dc2_ref: float  # auxiliary output target [V]
    v_m_min: float  # module voltage operating range [V]
    v_m_max: float
    v_m_rated: float
    v_fd: float  # rectifier diode forward drop [V]
    delta_vr_target: float  # allowed coupling-capacitor ripple [V]
    r_eq_estimate: float  # dimensionless parasitic ratio at the design point
    p_max2: float  # maximum auxiliary power [W]
    n_modules: int
    f_sw: float  # per-carrier switching frequency [Hz]
    sizing_frequency: SizingFrequency = SizingFrequency.PER_CARRIER

    def __post_init__(self):
        if not self.v_m_min <= self.v_m_rated <= self.v_m_max:
            raise ConfigurationError(
                f"need v_m_min <= v_m_rated <= v_m_max, got "
                f"{self.v_m_min}, {self.v_m_rated}, {self.v_m_max}"
            )
        for name in ("v_dc2_ref", "v_m_min", "p_max2", "f_sw", "delta_vr_target"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be > 0")
        if self.n_modules < 2:
            raise ConfigurationError("n_modules must be >= 2")
        if self.r_eq_estimate < 0 or self.v_fd < 0:
            raise ConfigurationError("r_eq_estimate and v_fd must be >= 0")


@dataclass(frozen=True)
class DesignOutputs:
    turns_lo: float
    turns_hi: float
    turns_recommended: float
    c_dc2_min: float  # coupling capacitor [F]
    c_dc3_min: float  # output capacitor [F]
    delta_v_max: float  # dc-link quantization half-step at rated voltage [V]


def turns_ratio_bounds(d: DesignInputs, practical: bool) -> tuple[float, float]:
    """Transformer-ratio window for the auxiliary target.

    The theoretical window evaluates both bounds at the rated module voltage;
    the practical window is tightened to hold across the full operating
    range, using v_m_min for the lower bound and v_m_max for the upper one.
    The 0.95/0.5 denominators are the usable duty margins at the two ends of
    the gain curve.
    """
    numer = (d.r_eq_estimate + 1.0) * (d.v_dc2_ref - d.v_fd)
    if numer <= 0:
        raise InfeasibleDesignError(
            f"diode drop {d.v_fd} V consumes the whole target {d.v_dc2_ref} V"
        )
    v_lo = d.v_m_min if practical else d.v_m_rated
    v_hi = d.v_m_max if practical else d.v_m_rated
    if d.delta_vr_target >= v_lo:
        raise InfeasibleDesignError(
            f"ripple target {d.delta_vr_target} V exceeds module voltage {v_lo} V"
        )
    lo = numer / (0.95 * (v_lo - d.delta_vr_target))
    hi = numer / (0.5 * (v_hi - d.delta_vr_target))
    if lo > hi:
        raise InfeasibleDesignError(
            f"module-voltage range too wide for a single ratio: "
            f"lower bound {lo:.4g} exceeds upper bound {hi:.4g}"
        )
    return lo, hi


def recommended_turns_ratio(d: DesignInputs) -> float:
    """Upper practical bound: puts the nominal operating point near D = 0.5."""
    return turns_ratio_bounds(d, practical=True)[1]


def _sizing_f(d: DesignInputs) -> float:
    if d.sizing_frequency is SizingFrequency.EFFECTIVE:
        return (d.n_modules - 1) * d.f_sw
    return d.f_sw


def size_coupling_capacitor(d: DesignInputs, turns: float) -> float:
    """Minimum series coupling capacitance for the ripple target [F]."""
    return d.p_max2 * turns / (
        (d.n_modules - 1) * d.v_dc2_ref * d.delta_vr_target * _sizing_f(d)
    )


def size_output_capacitor(d: DesignInputs) -> float:
    """Minimum auxiliary output capacitance for the ripple target [F]."""
    return d.p_max2 / (
        (d.n_modules - 1) * d.v_dc2_ref * d.delta_vr_target * _sizing_f(d)
    )


def dc_link_deviation_bound(n: int, v_m: float) -> float:
    """Half the dc-link level granularity: 0.5 * v_m / (n - 1) [V].

    Any exactly achievable dc-link reference is matched by the candidate
    search to within this magnitude; it shrinks as modules are added.
    """
    if n < 2:
        raise ConfigurationError("n must be >= 2")
    return 0.5 * v_m / (n - 1)


def run_design(d: DesignInputs) -> DesignOutputs:
    """Evaluate the complete sizing chain for one set of inputs."""
    lo, hi = turns_ratio_bounds(d, practical=True)
    return DesignOutputs(
        turns_lo=lo,
        turns_hi=hi,
        turns_recommended=hi,
        c_dc2_min=size_coupling_capacitor(d, hi),
        c_dc3_min=size_output_capacitor(d),
        delta_v_max=dc_link_deviation_bound(d.n_modules, d.v_m_rated),
    )

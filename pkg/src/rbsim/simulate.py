"""Fixed-step time-domain simulation of the full dual-port circuit.

State per step: buck inductor current, three capacitor voltages, transformer
magnetizing current, and the diode-bridge conduction branch. The switched
string, the rectifier loop, and the port coupling form a linear algebraic
system each step (per conduction branch), solved exactly; the storage
elements then advance by one explicit Euler update in symplectic order
(currents before the voltages they feed).

The rectifier conducts whenever the open-circuit secondary voltage exceeds
the output voltage plus two diode drops; the sign of the primary pulse
selects the forward or reverse diagonal. Between conduction intervals the
primary current is carried by the magnetizing inductance, which is what lets
the series coupling capacitor re-balance its charge every period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .analytics import AuxParams, Fidelity, aux_output_voltage, aux_output_voltage_constant_power
from .control import ControlRefs, ControlState, Measurements, control_step
from .errors import ConfigurationError, MetricsWindowError, SimulationFault
from .modulation import ModulationCommand, average_dc_link, effective_duty, inserted_tuple
from .pack import LoadKind, LoadSpec, PackConfig

MIN_STEPS_PER_EFFECTIVE_PERIOD = 50
DEFAULT_STEPS_PER_EFFECTIVE_PERIOD = 200


class BridgeState(str, Enum):
    OFF = "off"
    FORWARD = "forward"  # positive primary pulse conducting
    REVERSE = "reverse"  # negative primary pulse conducting


@dataclass(frozen=True)
class SimState:
    t: float
    i_l: float  # buck inductor current [A]
    v_c1: float  # dc-link capacitor voltage [V]
    v_c2: float  # coupling capacitor voltage [V]
    v_c3: float  # auxiliary output voltage [V]
    i_mag: float  # transformer magnetizing current, primary side [A]
    bridge: BridgeState = BridgeState.OFF


@dataclass(frozen=True)
class ScenarioStep:
    """One segment of a scenario: references and loads from t_start onward."""

    t_start: float
    v_dc1_ref: float
    v_dc2_ref: float
    load1: LoadSpec
    load2: LoadSpec | None = None  # None = auxiliary port unloaded


@dataclass(frozen=True)
class SegmentInfo:
    t_start: float
    v_dc1_ref: float
    v_dc2_ref: float
    start_index: int  # first sample row of this segment


@dataclass
class Trace:
    """Uniformly sampled run record; columns match the CSV contract."""

    dt: float
    stride: int
    t: np.ndarray = field(default_factory=lambda: np.empty(0))
    v_str: np.ndarray = field(default_factory=lambda: np.empty(0))
    v_dc1: np.ndarray = field(default_factory=lambda: np.empty(0))
    i_l: np.ndarray = field(default_factory=lambda: np.empty(0))
    v_in: np.ndarray = field(default_factory=lambda: np.empty(0))
    v_dc2: np.ndarray = field(default_factory=lambda: np.empty(0))
    i_load2: np.ndarray = field(default_factory=lambda: np.empty(0))
    m: np.ndarray = field(default_factory=lambda: np.empty(0))
    d_star: np.ndarray = field(default_factory=lambda: np.empty(0))
    segments: list[SegmentInfo] = field(default_factory=list)
    # cumulative energies at the sample instants, for balance checks
    e_battery: np.ndarray = field(default_factory=lambda: np.empty(0))
    e_load1: np.ndarray = field(default_factory=lambda: np.empty(0))
    e_load2: np.ndarray = field(default_factory=lambda: np.empty(0))

    COLUMNS = ("t", "v_str", "v_dc1", "i_l", "v_in", "v_dc2", "i_load2", "m", "d_star")

    def __len__(self) -> int:
        return len(self.t)

    def segment_bounds(self, idx: int) -> tuple[int, int]:
        """Sample-row range [lo, hi) of segment idx."""
        lo = self.segments[idx].start_index
        hi = self.segments[idx + 1].start_index if idx + 1 < len(self.segments) else len(self.t)
        return lo, hi

    def segment_view(self, idx: int) -> "Trace":
        """A single-segment slice (shares the underlying arrays)."""
        lo, hi = self.segment_bounds(idx)
        seg = self.segments[idx]
        return Trace(
            dt=self.dt,
            stride=self.stride,
            t=self.t[lo:hi],
            v_str=self.v_str[lo:hi],
            v_dc1=self.v_dc1[lo:hi],
            i_l=self.i_l[lo:hi],
            v_in=self.v_in[lo:hi],
            v_dc2=self.v_dc2[lo:hi],
            i_load2=self.i_load2[lo:hi],
            m=self.m[lo:hi],
            d_star=self.d_star[lo:hi],
            segments=[SegmentInfo(seg.t_start, seg.v_dc1_ref, seg.v_dc2_ref, 0)],
            e_battery=self.e_battery[lo:hi],
            e_load1=self.e_load1[lo:hi],
            e_load2=self.e_load2[lo:hi],
        )

    def write_csv(self, path, manifest_lines: Sequence[str] = ()) -> None:
        cols = [getattr(self, name) for name in self.COLUMNS]
        with open(path, "w") as f:
            for line in manifest_lines:
                f.write(f"# {line}\n")
            f.write(",".join(self.COLUMNS) + "\n")
            for row in zip(*cols):
                f.write(",".join(repr(float(x)) for x in row) + "\n")


@dataclass(frozen=True)
class PortMetrics:
    mean: float
    ripple_pct: float  # peak-to-peak as % of the mean
    ref: float | None = None
    max_dev_pct: float | None = None  # max |v - ref| as % of ref


@dataclass(frozen=True)
class SteadyStateMetrics:
    window_t0: float
    window_t1: float
    dc_link: PortMetrics
    aux: PortMetrics
    i_l_mean: float

    def as_dict(self) -> dict:
        def port(p: PortMetrics) -> dict:
            return {
                "mean": p.mean,
                "ripple_pct": p.ripple_pct,
                "ref": p.ref,
                "max_dev_pct": p.max_dev_pct,
            }

        return {
            "window_t0": self.window_t0,
            "window_t1": self.window_t1,
            "dc_link": port(self.dc_link),
            "aux": port(self.aux),
            "i_l_mean": self.i_l_mean,
        }


def default_dt(config: PackConfig) -> float:
    return 1.0 / (DEFAULT_STEPS_PER_EFFECTIVE_PERIOD * config.effective_switching_frequency)


def _check_dt(config: PackConfig, dt: float) -> None:
    limit = 1.0 / (MIN_STEPS_PER_EFFECTIVE_PERIOD * config.effective_switching_frequency)
    if dt > limit * (1.0 + 1e-12):
        raise ConfigurationError(
            f"dt={dt:.3e} s too coarse; need <= {limit:.3e} s "
            f"({MIN_STEPS_PER_EFFECTIVE_PERIOD} samples per effective period)"
        )


def _load_terms(load: LoadSpec | None) -> tuple[int, float]:
    """Encode a load for the kernel: (0 open, 1 resistive, 2 constant-power)."""
    if load is None:
        return 0, 0.0
    if load.kind is LoadKind.RESISTIVE:
        return 1, load.value
    return 2, load.value


def make_step_kernel(
    config: PackConfig,
    load1: LoadSpec,
    load2: LoadSpec | None,
    v_min_guard: float = 1.0,
) -> Callable:
    """Build the per-step update closure for fixed loads.

    Returns kernel(t, i_l, v_c1, v_c2, v_c3, i_mag, m, dt) ->
    (i_l', v_c1', v_c2', v_c3', i_mag', bridge_code, v_str, v_in, i_1, i_2,
    i_load1, i_load2); bridge codes are 0=off, 1=forward, 2=reverse.
    """
    n = config.n_modules
    f_sw = config.f_sw
    v_oc = tuple(p.v_oc for p in config.modules)
    r_ins = tuple(p.r_bt + p.r_ds for p in config.modules)
    r_byp = tuple(p.r_ds for p in config.modules)
    l_dc, r_ldc, c1, c2, c3 = config.l_dc, config.r_ldc, config.c_dc1, config.c_dc2, config.c_dc3
    a = config.turns_ratio
    r_eq1, r_eq2, two_vfd = config.r_eq1, config.r_eq2, 2.0 * config.v_fd
    l_mag = config.l_mag
    coupled = config.aux_string_coupling
    k1, val1 = _load_terms(load1)
    k2, val2 = _load_terms(load2)

    def kernel(t, i_l, v_c1, v_c2, v_c3, i_mag, m, dt):
        inserted = inserted_tuple(m, t, f_sw, n)
        emf = 0.0
        r_s = 0.0
        for j in range(n):
            if inserted[j]:
                emf += v_oc[j]
                r_s += r_ins[j]
            else:
                r_s += r_byp[j]

        # rectifier loop: open-circuit drive and exact branch solve
        b0 = emf - r_s * i_l - v_c2
        r_pri = (r_s + r_eq1) if coupled else r_eq1
        v_in_oc = b0 - r_pri * i_mag
        denom = a * a * r_pri + r_eq2
        if denom <= 0.0:
            raise SimulationFault("rectifier loop has no series resistance", t)
        e_fwd = a * v_in_oc - v_c3 - two_vfd
        if e_fwd > 0.0:
            i_2 = e_fwd / denom
            i_1 = i_mag + a * i_2
            bridge = 1
        else:
            e_rev = -a * v_in_oc - v_c3 - two_vfd
            if e_rev > 0.0:
                i_2 = e_rev / denom
                i_1 = i_mag - a * i_2
                bridge = 2
            else:
                i_2 = 0.0
                i_1 = i_mag
                bridge = 0

        v_str = emf - r_s * (i_l + i_1) if coupled else emf - r_s * i_l
        v_in = v_str - v_c2 if coupled else b0
        v_pri = v_in - r_eq1 * i_1

        if k1 == 2 and v_c1 < v_min_guard:
            raise SimulationFault(
                f"dc-link voltage {v_c1:.3g} V below constant-power guard", t
            )
        i_load1 = v_c1 / val1 if k1 == 1 else (val1 / v_c1 if k1 == 2 else 0.0)
        if k2 == 2 and v_c3 < v_min_guard:
            raise SimulationFault(
                f"aux voltage {v_c3:.3g} V below constant-power guard", t
            )
        i_load2 = v_c3 / val2 if k2 == 1 else (val2 / v_c3 if k2 == 2 else 0.0)

        i_l_new = i_l + dt * (v_str - r_ldc * i_l - v_c1) / l_dc
        v_c1_new = v_c1 + dt * (i_l_new - i_load1) / c1
        v_c2_new = v_c2 + dt * i_1 / c2
        v_c3_new = v_c3 + dt * (i_2 - i_load2) / c3
        if v_c3_new < 0.0:
            v_c3_new = 0.0
        i_mag_new = i_mag + dt * v_pri / l_mag

        return (
            i_l_new, v_c1_new, v_c2_new, v_c3_new, i_mag_new,
            bridge, v_str, v_in, i_1, i_2, i_load1, i_load2, emf,
        )

    return kernel


_BRIDGE_FROM_CODE = (BridgeState.OFF, BridgeState.FORWARD, BridgeState.REVERSE)


def step(
    state: SimState,
    m: ModulationCommand | float,
    config: PackConfig,
    dt: float,
    load1: LoadSpec,
    load2: LoadSpec | None = None,
    v_min_guard: float = 1.0,
) -> SimState:
    """Advance the circuit by one fixed step (convenience wrapper)."""
    _check_dt(config, dt)
    mv = m.m if isinstance(m, ModulationCommand) else float(m)
    kernel = make_step_kernel(config, load1, load2, v_min_guard)
    out = kernel(state.t, state.i_l, state.v_c1, state.v_c2, state.v_c3, state.i_mag, mv, dt)
    return SimState(
        t=state.t + dt,
        i_l=out[0], v_c1=out[1], v_c2=out[2], v_c3=out[3], i_mag=out[4],
        bridge=_BRIDGE_FROM_CODE[out[5]],
    )


def init_state(
    config: PackConfig,
    m0: float,
    v_dc1_ref: float,
    v_dc2_ref: float,
    load1: LoadSpec,
    load2: LoadSpec | None = None,
) -> SimState:
    """Warm start at the predicted operating point.

    The dc link and the coupling capacitor start at the commanded average
    string voltage, the auxiliary output at its reference, the inductor at
    the load-current estimate, and the magnetizing current at the dc offset
    the coupling-capacitor charge balance will force.
    """
    v_bar = config.mean_v_oc
    v_c1 = average_dc_link(m0, config.n_modules, v_bar)
    i_l = load1.current(v_c1)
    v_c3 = max(v_dc2_ref, 0.0)
    i2_est = load2.current(v_c3) if (load2 is not None and v_c3 > 0.0) else 0.0
    return SimState(
        t=0.0,
        i_l=i_l,
        v_c1=v_c1,
        v_c2=v_c1,
        v_c3=v_c3,
        i_mag=-config.turns_ratio * i2_est,
        bridge=BridgeState.OFF,
    )


def _controller_aux_params(
    config: PackConfig, load2: LoadSpec | None, v_dc2_ref: float
) -> AuxParams | None:
    """Feedforward model for the current segment; None while the port is off.

    When the ports are coupled, the switched-string path resistance at the
    nominal insertion depth is folded into the primary side so the duty
    feedforward lands close and the PI only trims residuals. An unloaded but
    regulated port is modelled with a near-open load.
    """
    if v_dc2_ref <= 0.0:
        return None
    extra = 0.0
    if config.aux_string_coupling:
        x = 0.5 * (1.0 + config.n_modules)  # mid-range insertion estimate
        mean_r_byp = sum(p.r_ds for p in config.modules) / config.n_modules
        extra = config.mean_insert_resistance * x + mean_r_byp * (config.n_modules - x)
    load = load2 if load2 is not None else LoadSpec.resistive(1e9)
    return AuxParams.from_pack(
        config, load, delta_vr=0.0, v_guess=v_dc2_ref, extra_primary_resistance=extra
    )


def run_scenario(
    config: PackConfig,
    schedule: Sequence[ScenarioStep],
    *,
    control: bool = True,
    fixed_m: float | None = None,
    duration: float,
    dt: float | None = None,
    sample_stride: int = 1,
    controller: ControlState | None = None,
    control_period: float | None = None,
    v_min_guard: float = 1.0,
    initial: SimState | None = None,
) -> Trace:
    """Run the circuit through a scenario schedule and record a trace.

    With control=True the dual-port controller re-selects the modulation
    index once per control period (default: one effective switching period);
    otherwise fixed_m is held for the whole run.
    """
    if not schedule:
        raise ConfigurationError("schedule must contain at least one step")
    starts = [s.t_start for s in schedule]
    if starts != sorted(starts):
        raise ConfigurationError("scenario steps must be sorted by t_start")
    if not control and fixed_m is None:
        raise ConfigurationError("fixed_m required when control is disabled")

    if dt is None:
        dt = default_dt(config)
    _check_dt(config, dt)
    n_steps = int(round(duration / dt))
    if control_period is None:
        control_period = 1.0 / config.effective_switching_frequency
    cp_steps = max(1, int(round(control_period / dt)))

    seg_idx = 0
    seg = schedule[0]
    state = controller if controller is not None else ControlState()
    m = fixed_m if fixed_m is not None else state.m_selected

    if initial is None:
        m_init = m if not control else _initial_m_guess(config, seg)
        initial = init_state(config, m_init, seg.v_dc1_ref, seg.v_dc2_ref, seg.load1, seg.load2)
        if not control:
            # fixed-m runs warm-start the aux output at its predicted level
            v_pred = _predicted_aux(config, fixed_m, seg.load2)
            i2_est = seg.load2.current(v_pred) if (seg.load2 and v_pred > 0.0) else 0.0
            initial = SimState(
                t=0.0, i_l=initial.i_l, v_c1=initial.v_c1, v_c2=initial.v_c1,
                v_c3=v_pred, i_mag=-config.turns_ratio * i2_est,
            )
        m = m_init if control else fixed_m

    t, i_l, v_c1, v_c2, v_c3, i_mag = (
        initial.t, initial.i_l, initial.v_c1, initial.v_c2, initial.v_c3, initial.i_mag,
    )
    kernel = make_step_kernel(config, seg.load1, seg.load2, v_min_guard)
    aux_model = _controller_aux_params(config, seg.load2, seg.v_dc2_ref)
    mean_r = config.mean_insert_resistance
    v_oc_bar = config.mean_v_oc
    d_star = state.d_star if control else effective_duty(m, config.n_modules)

    cols: dict[str, list[float]] = {name: [] for name in Trace.COLUMNS}
    e_b: list[float] = []
    e_1: list[float] = []
    e_2: list[float] = []
    segments = [SegmentInfo(seg.t_start, seg.v_dc1_ref, seg.v_dc2_ref, 0)]
    acc_energy_b = acc_energy_1 = acc_energy_2 = 0.0
    acc_vc3 = acc_vc1 = acc_il = 0.0
    acc_n = 0

    for istep in range(n_steps):
        # segment switch
        while seg_idx + 1 < len(schedule) and t >= schedule[seg_idx + 1].t_start - 0.5 * dt:
            seg_idx += 1
            seg = schedule[seg_idx]
            kernel = make_step_kernel(config, seg.load1, seg.load2, v_min_guard)
            aux_model = _controller_aux_params(config, seg.load2, seg.v_dc2_ref)
            segments.append(
                SegmentInfo(seg.t_start, seg.v_dc1_ref, seg.v_dc2_ref, len(cols["t"]))
            )

        if control and istep % cp_steps == 0:
            if acc_n:
                mv_c3, mv_c1, mi_l = acc_vc3 / acc_n, acc_vc1 / acc_n, acc_il / acc_n
            else:
                mv_c3, mv_c1, mi_l = v_c3, v_c1, i_l
            acc_vc3 = acc_vc1 = acc_il = 0.0
            acc_n = 0
            meas = Measurements(v_dc2=mv_c3, v_m_bar=v_oc_bar - mean_r * mi_l, v_dc1=mv_c1)
            refs = ControlRefs(seg.v_dc1_ref, seg.v_dc2_ref)
            cmd, state = control_step(
                meas, refs, state, config, aux_model or _DUMMY_AUX, control_period
            )
            m = cmd.m
            d_star = state.d_star

        out = kernel(t, i_l, v_c1, v_c2, v_c3, i_mag, m, dt)
        (i_l_n, v_c1_n, v_c2_n, v_c3_n, i_mag_n,
         _bridge, v_str, v_in, i_1, i_2, i_load1, i_load2, emf) = out

        i_str = i_l + i_1 if config.aux_string_coupling else i_l
        acc_energy_b += emf * i_str * dt
        acc_energy_1 += v_c1 * i_load1 * dt
        acc_energy_2 += v_c3 * i_load2 * dt
        acc_vc3 += v_c3
        acc_vc1 += v_c1
        acc_il += i_l
        acc_n += 1

        if istep % sample_stride == 0:
            cols["t"].append(t)
            cols["v_str"].append(v_str)
            cols["v_dc1"].append(v_c1)
            cols["i_l"].append(i_l)
            cols["v_in"].append(v_in)
            cols["v_dc2"].append(v_c3)
            cols["i_load2"].append(i_load2)
            cols["m"].append(m)
            cols["d_star"].append(d_star)
            e_b.append(acc_energy_b)
            e_1.append(acc_energy_1)
            e_2.append(acc_energy_2)

        t += dt
        i_l, v_c1, v_c2, v_c3, i_mag = i_l_n, v_c1_n, v_c2_n, v_c3_n, i_mag_n

    return Trace(
        dt=dt,
        stride=sample_stride,
        segments=segments,
        e_battery=np.asarray(e_b),
        e_load1=np.asarray(e_1),
        e_load2=np.asarray(e_2),
        **{name: np.asarray(vals) for name, vals in cols.items()},
    )


_DUMMY_AUX = AuxParams(turns_ratio=1.0, r_eq1=0.0, r_eq2=0.0, v_fd=0.0, r_load=1.0)


def _initial_m_guess(config: PackConfig, seg: ScenarioStep) -> float:
    x = (seg.v_dc1_ref / config.mean_v_oc - 1.0) / (config.n_modules - 1)
    return min(max(x, 0.0), 1.0)


def _predicted_aux(config: PackConfig, m: float, load2: LoadSpec | None) -> float:
    """Closed-form aux voltage used to warm-start fixed-m runs."""
    if load2 is None:
        return 0.0
    d = effective_duty(m, config.n_modules)
    if d == 0.0:
        return 0.0
    v_bar = config.mean_v_oc
    try:
        if load2.kind is LoadKind.CONSTANT_POWER:
            p = AuxParams.from_pack(config, load2, v_guess=config.turns_ratio * v_bar * 0.75)
            return aux_output_voltage_constant_power(d, v_bar, p, load2.value)
        p = AuxParams.from_pack(config, load2)
        return aux_output_voltage(d, v_bar, p, Fidelity.FULL)
    except (ConfigurationError, ValueError):
        return 0.0


def run_fixed(
    config: PackConfig,
    m: float,
    load1: LoadSpec,
    load2: LoadSpec | None,
    duration: float,
    *,
    dt: float | None = None,
    sample_stride: int = 1,
    v_min_guard: float = 1.0,
    v_dc1_ref: float | None = None,
    v_dc2_ref: float = 0.0,
) -> Trace:
    """Open-loop run at a constant modulation index."""
    ref1 = v_dc1_ref if v_dc1_ref is not None else average_dc_link(m, config.n_modules, config.mean_v_oc)
    sched = [ScenarioStep(0.0, ref1, v_dc2_ref, load1, load2)]
    return run_scenario(
        config, sched, control=False, fixed_m=m, duration=duration,
        dt=dt, sample_stride=sample_stride, v_min_guard=v_min_guard,
    )


def steady_state_metrics(trace: Trace, window: float = 0.1) -> SteadyStateMetrics:
    """Mean, ripple, and reference deviation over the trailing window.

    The window must lie entirely inside the final scenario segment; a
    reference step inside it would make the statistics meaningless.
    """
    if not 0.0 < window <= 1.0:
        raise ConfigurationError(f"window must be in (0, 1], got {window}")
    if len(trace) < 2:
        raise MetricsWindowError("trace too short for metrics")
    t0, t1 = trace.t[0], trace.t[-1]
    w_start = t1 - window * (t1 - t0)
    for seg in trace.segments[1:]:
        if seg.t_start > w_start:
            raise MetricsWindowError(
                f"reference step at t={seg.t_start:.6g} s inside the metrics window"
            )
    sel = trace.t >= w_start
    seg = trace.segments[-1]

    def port(values: np.ndarray, ref: float | None) -> PortMetrics:
        mean = float(values.mean())
        ripple = float(values.max() - values.min()) / abs(mean) * 100.0 if mean else math.inf
        if ref is not None and ref > 0.0:
            dev = float(np.abs(values - ref).max()) / ref * 100.0
            return PortMetrics(mean, ripple, ref, dev)
        return PortMetrics(mean, ripple, None, None)

    return SteadyStateMetrics(
        window_t0=float(w_start),
        window_t1=float(t1),
        dc_link=port(trace.v_dc1[sel], seg.v_dc1_ref),
        aux=port(trace.v_dc2[sel], seg.v_dc2_ref if seg.v_dc2_ref > 0 else None),
        i_l_mean=float(trace.i_l[sel].mean()),
    )


def metrics_by_segment(trace: Trace, window: float = 0.1) -> list[SteadyStateMetrics]:
    """Trailing-window metrics for every scenario segment."""
    return [steady_state_metrics(trace.segment_view(i), window) for i in range(len(trace.segments))]

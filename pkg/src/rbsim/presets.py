"""Ready-made configurations at the two study scales.

ev_scale_config: ten 91 V modules feeding a 400-800 V dc link and a 48 V
auxiliary bus (simulation-study scale). bench_scale_config: five 24 V
modules, 20-100 V link, 12 V auxiliary bus (laboratory scale). Component
values follow the published parameter tables for those two systems; carrier
frequency, transformer parasitics, and magnetizing inductance are not listed
there and carry documented assumptions instead.

The transformer ratio is always derived from the design inputs, so the
shipped configs are self-consistent with the sizing rules.
"""

from __future__ import annotations

from .config import AuxDefaults, FullConfig, SimSettings
from .control import ControlState
from .design import DesignInputs, recommended_turns_ratio
from .pack import LoadSpec, ModuleParams, PackConfig
from .simulate import ScenarioStep


def ev_scale_design() -> DesignInputs:
    return DesignInputs(
        v_dc2_ref=48.0,
        v_m_min=82.0,
        v_m_max=103.0,
        v_m_rated=91.0,
        v_fd=0.8,
        delta_vr_target=6.0,
        r_eq_estimate=0.15,  # includes the switched-string path, not just the transformer
        p_max2=5000.0,
        n_modules=10,
        f_sw=5000.0,
    )


def ev_scale_config() -> FullConfig:
    design = ev_scale_design()
    turns = recommended_turns_ratio(design)
    module = ModuleParams(v_oc=91.0, r_bt=0.005, r_ds=0.001, r_d=0.001)
    pack = PackConfig(
        n_modules=10,
        f_sw=5000.0,  # per-carrier; 45 kHz effective pulse rate
        l_dc=23e-6,
        r_ldc=0.010,
        c_dc1=20e-6,
        c_dc2=348e-6,
        c_dc3=5.4e-3,
        turns_ratio=turns,
        r_l1=0.003,
        r_l2=0.003,
        r_cdc2=0.002,
        v_fd=0.8,
        r_fd=0.002,
        modules=(module,) * 10,
        l_mag=5e-4,
    )
    main = LoadSpec.constant_power(300e3)
    half = LoadSpec.constant_power(150e3)
    aux = LoadSpec.constant_power(5e3)
    # references sit near achievable dc-link levels at the loaded module voltage
    scenario = [
        ScenarioStep(0.0, 570.0, 48.0, main, aux),
        ScenarioStep(4e-3, 660.0, 48.0, main, aux),
        ScenarioStep(8e-3, 660.0, 48.0, half, aux),
        ScenarioStep(12e-3, 480.0, 48.0, half, aux),
    ]
    return FullConfig(
        pack=pack,
        aux=AuxDefaults(r_load=48.0**2 / 5e3),
        controller=ControlState(kp=0.004, ki=0.5, hys_band=0.048, anti_windup_limit=0.25),
        sim=SimSettings(duration=16e-3, sample_stride=10, metrics_window=0.1),
        design=design,
        scenario=scenario,
    )


def bench_scale_design() -> DesignInputs:
    return DesignInputs(
        v_dc2_ref=12.0,
        v_m_min=22.0,
        v_m_max=25.2,
        v_m_rated=24.0,
        v_fd=0.6,
        delta_vr_target=0.25,
        r_eq_estimate=0.06,
        p_max2=36.0,
        n_modules=5,
        f_sw=5000.0,
    )


def bench_scale_config() -> FullConfig:
    design = bench_scale_design()
    turns = recommended_turns_ratio(design)
    module = ModuleParams(v_oc=24.0, r_bt=0.020, r_ds=0.001, r_d=0.001)
    pack = PackConfig(
        n_modules=5,
        f_sw=5000.0,  # 20 kHz effective
        l_dc=200e-6,
        r_ldc=0.050,
        c_dc1=100e-6,
        c_dc2=940e-6,
        c_dc3=2.7e-3,
        turns_ratio=turns,
        r_l1=0.025,
        r_l2=0.040,
        r_cdc2=0.015,
        v_fd=0.6,
        r_fd=0.015,
        modules=(module,) * 5,
        l_mag=2e-3,
    )
    rl = LoadSpec.resistive(5.5)
    light = LoadSpec.resistive(9.0)
    aux = LoadSpec.resistive(4.0)
    # auxiliary reference toggles between off (0) and the 12 V bus
    scenario = [
        ScenarioStep(0.0, 57.0, 0.0, rl, aux),
        ScenarioStep(20e-3, 57.0, 12.0, rl, aux),
        ScenarioStep(40e-3, 80.0, 12.0, light, aux),
        ScenarioStep(60e-3, 80.0, 0.0, light, aux),
        ScenarioStep(80e-3, 45.0, 12.0, rl, aux),
    ]
    return FullConfig(
        pack=pack,
        aux=AuxDefaults(r_load=4.0),
        controller=ControlState(kp=0.02, ki=2.0, hys_band=0.012, anti_windup_limit=0.25),
        sim=SimSettings(duration=0.1, sample_stride=10, metrics_window=0.1),
        design=design,
        scenario=scenario,
    )


PRESETS = {
    "ev_scale": ev_scale_config,
    "bench_scale": bench_scale_config,
}

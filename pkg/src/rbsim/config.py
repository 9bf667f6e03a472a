"""Single JSON configuration of record for every experiment.

Sections: pack (electrical parameters), aux (analytics defaults), controller
(gains and bands), design (sizing inputs), scenario (reference/load
schedule), sim (solver options), assertions (optional metric limits enforced
by the simulate command). Field names map one-to-one onto the dataclasses;
SI units throughout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .control import ControlState
from .design import DesignInputs, SizingFrequency
from .errors import ConfigurationError
from .pack import LoadKind, LoadSpec, ModuleParams, PackConfig
from .simulate import ScenarioStep


@dataclass(frozen=True)
class AuxDefaults:
    """Analytics defaults used by the analyze command."""

    r_load: float
    delta_vr: float = 0.0


@dataclass(frozen=True)
class SimSettings:
    duration: float = 0.01
    dt: float | None = None  # None -> 200 samples per effective period
    sample_stride: int = 1
    v_min_guard: float = 1.0
    control_period: float | None = None  # None -> one effective period
    metrics_window: float = 0.1


@dataclass
class FullConfig:
    pack: PackConfig
    aux: AuxDefaults
    controller: ControlState
    sim: SimSettings = field(default_factory=SimSettings)
    design: DesignInputs | None = None
    scenario: list[ScenarioStep] = field(default_factory=list)
    assertions: dict[str, float] = field(default_factory=dict)

    def fresh_controller(self) -> ControlState:
        """A new controller state carrying the configured gains."""
        c = self.controller
        return ControlState(
            kp=c.kp, ki=c.ki, hys_band=c.hys_band,
            anti_windup_limit=c.anti_windup_limit,
            duty_min=c.duty_min, duty_max=c.duty_max,
        )


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigurationError(f"missing '{key}' in {where} section")
    return section[key]


def _load_spec_from(obj: dict | None, where: str) -> LoadSpec | None:
    if obj is None:
        return None
    kind = _require(obj, "kind", where)
    try:
        kind = LoadKind(kind)
    except ValueError:
        raise ConfigurationError(f"unknown load kind {kind!r} in {where}") from None
    return LoadSpec(kind, float(_require(obj, "value", where)))


def _load_spec_dict(load: LoadSpec | None) -> dict | None:
    if load is None:
        return None
    return {"kind": load.kind.value, "value": load.value}


def pack_from_dict(d: dict) -> PackConfig:
    modules = tuple(
        ModuleParams(
            v_oc=float(_require(mo, "v_oc", f"pack.modules[{i}]")),
            r_bt=float(_require(mo, "r_bt", f"pack.modules[{i}]")),
            r_ds=float(_require(mo, "r_ds", f"pack.modules[{i}]")),
            r_d=float(mo.get("r_d", 0.001)),
        )
        for i, mo in enumerate(_require(d, "modules", "pack"))
    )
    return PackConfig(
        n_modules=int(_require(d, "n_modules", "pack")),
        f_sw=float(_require(d, "f_sw", "pack")),
        l_dc=float(_require(d, "l_dc", "pack")),
        r_ldc=float(_require(d, "r_ldc", "pack")),
        c_dc1=float(_require(d, "c_dc1", "pack")),
        c_dc2=float(_require(d, "c_dc2", "pack")),
        c_dc3=float(_require(d, "c_dc3", "pack")),
        turns_ratio=float(_require(d, "turns_ratio", "pack")),
        r_l1=float(_require(d, "r_l1", "pack")),
        r_l2=float(_require(d, "r_l2", "pack")),
        r_cdc2=float(_require(d, "r_cdc2", "pack")),
        v_fd=float(_require(d, "v_fd", "pack")),
        r_fd=float(_require(d, "r_fd", "pack")),
        modules=modules,
        l_mag=float(d.get("l_mag", 1e-3)),
        aux_string_coupling=bool(d.get("aux_string_coupling", True)),
    )


def pack_to_dict(p: PackConfig) -> dict:
    return {
        "n_modules": p.n_modules,
        "f_sw": p.f_sw,
        "l_dc": p.l_dc,
        "r_ldc": p.r_ldc,
        "c_dc1": p.c_dc1,
        "c_dc2": p.c_dc2,
        "c_dc3": p.c_dc3,
        "turns_ratio": p.turns_ratio,
        "r_l1": p.r_l1,
        "r_l2": p.r_l2,
        "r_cdc2": p.r_cdc2,
        "v_fd": p.v_fd,
        "r_fd": p.r_fd,
        "l_mag": p.l_mag,
        "aux_string_coupling": p.aux_string_coupling,
        "modules": [
            {"v_oc": m.v_oc, "r_bt": m.r_bt, "r_ds": m.r_ds, "r_d": m.r_d}
            for m in p.modules
        ],
    }


def config_from_dict(d: dict) -> FullConfig:
    pack = pack_from_dict(_require(d, "pack", "top level"))

    aux_d = _require(d, "aux", "top level")
    aux = AuxDefaults(
        r_load=float(_require(aux_d, "r_load", "aux")),
        delta_vr=float(aux_d.get("delta_vr", 0.0)),
    )

    ctl_d = d.get("controller", {})
    controller = ControlState(
        kp=float(ctl_d.get("kp", 0.02)),
        ki=float(ctl_d.get("ki", 2.0)),
        hys_band=float(ctl_d.get("hys_band", 0.06)),
        anti_windup_limit=float(ctl_d.get("anti_windup_limit", 0.25)),
        duty_min=float(ctl_d.get("duty_min", 0.05)),
        duty_max=float(ctl_d.get("duty_max", 0.95)),
    )

    sim_d = d.get("sim", {})
    sim = SimSettings(
        duration=float(sim_d.get("duration", 0.01)),
        dt=None if sim_d.get("dt") is None else float(sim_d["dt"]),
        sample_stride=int(sim_d.get("sample_stride", 1)),
        v_min_guard=float(sim_d.get("v_min_guard", 1.0)),
        control_period=(
            None if sim_d.get("control_period") is None else float(sim_d["control_period"])
        ),
        metrics_window=float(sim_d.get("metrics_window", 0.1)),
    )

    design = None
    if d.get("design") is not None:
        dd = d["design"]
        design = DesignInputs(
            v_dc2_ref=float(_require(dd, "v_dc2_ref", "design")),
            v_m_min=float(_require(dd, "v_m_min", "design")),
            v_m_max=float(_require(dd, "v_m_max", "design")),
            v_m_rated=float(_require(dd, "v_m_rated", "design")),
            v_fd=float(_require(dd, "v_fd", "design")),
            delta_vr_target=float(_require(dd, "delta_vr_target", "design")),
            r_eq_estimate=float(_require(dd, "r_eq_estimate", "design")),
            p_max2=float(_require(dd, "p_max2", "design")),
            n_modules=int(_require(dd, "n_modules", "design")),
            f_sw=float(_require(dd, "f_sw", "design")),
            sizing_frequency=SizingFrequency(dd.get("sizing_frequency", "per_carrier")),
        )

    scenario = []
    for i, s in enumerate(d.get("scenario", [])):
        where = f"scenario[{i}]"
        scenario.append(
            ScenarioStep(
                t_start=float(_require(s, "t_start", where)),
                v_dc1_ref=float(_require(s, "v_dc1_ref", where)),
                v_dc2_ref=float(_require(s, "v_dc2_ref", where)),
                load1=_load_spec_from(_require(s, "load1", where), where),
                load2=_load_spec_from(s.get("load2"), where),
            )
        )

    return FullConfig(
        pack=pack,
        aux=aux,
        controller=controller,
        sim=sim,
        design=design,
        scenario=scenario,
        assertions={k: float(v) for k, v in d.get("assertions", {}).items()},
    )


def config_to_dict(cfg: FullConfig) -> dict:
    d: dict = {
        "pack": pack_to_dict(cfg.pack),
        "aux": {"r_load": cfg.aux.r_load, "delta_vr": cfg.aux.delta_vr},
        "controller": {
            "kp": cfg.controller.kp,
            "ki": cfg.controller.ki,
            "hys_band": cfg.controller.hys_band,
            "anti_windup_limit": cfg.controller.anti_windup_limit,
            "duty_min": cfg.controller.duty_min,
            "duty_max": cfg.controller.duty_max,
        },
        "sim": {
            "duration": cfg.sim.duration,
            "dt": cfg.sim.dt,
            "sample_stride": cfg.sim.sample_stride,
            "v_min_guard": cfg.sim.v_min_guard,
            "control_period": cfg.sim.control_period,
            "metrics_window": cfg.sim.metrics_window,
        },
    }
    if cfg.design is not None:
        dd = cfg.design
        d["design"] = {
            "v_dc2_ref": dd.v_dc2_ref,
            "v_m_min": dd.v_m_min,
            "v_m_max": dd.v_m_max,
            "v_m_rated": dd.v_m_rated,
            "v_fd": dd.v_fd,
            "delta_vr_target": dd.delta_vr_target,
            "r_eq_estimate": dd.r_eq_estimate,
            "p_max2": dd.p_max2,
            "n_modules": dd.n_modules,
            "f_sw": dd.f_sw,
            "sizing_frequency": dd.sizing_frequency.value,
        }
    if cfg.scenario:
        d["scenario"] = [
            {
                "t_start": s.t_start,
                "v_dc1_ref": s.v_dc1_ref,
                "v_dc2_ref": s.v_dc2_ref,
                "load1": _load_spec_dict(s.load1),
                "load2": _load_spec_dict(s.load2),
            }
            for s in cfg.scenario
        ]
    if cfg.assertions:
        d["assertions"] = dict(cfg.assertions)
    return d


def load_config(path: str | Path) -> FullConfig:
    with open(path) as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"invalid JSON in {path}: {e}") from None
    return config_from_dict(raw)


def save_config(cfg: FullConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(cfg), indent=2) + "\n")

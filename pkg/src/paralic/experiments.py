"""Configuration driven error studies for the two chamber decomposition.

Three table studies quantify the confinement error of the truncated main
chamber against the full reference:

    table-uc   interface width sweep with the assumed Poiseuille profile
    table-c    same sweep with the sampled exact profile, plus the ratio
               of the two errors (the price of not knowing the real flux)
    table-nu   diffusivity sweep at the widest interface

plus a full pipeline run (reference + main + secondary chamber) that emits
the concatenated field and its difference to the reference as VTK files.

Published errors from the original study are carried along as annotation
columns for orientation only; they come from a different discretization and
are never treated as targets.  All rows land in ``results.csv`` with a fixed
column set; each study also writes its own CSV with the extra columns.
"""

import csv
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from .decomposition import (
    build_chamber_meshes,
    entrance_nodes,
    interface_nodes,
    linf_error,
    main_run,
    reference_run,
    seg_run,
    truncation_error,
)
from .elliptic import PhysicalParams
from .geometry import (
    ALL_PROFILES,
    PROFILE_EXACT_POINTWISE,
    PROFILE_POISEUILLE,
    REGION_MAIN,
    GeometryParams,
    InterfaceProfile,
    build_lagoon,
)
from .transport import TransportConfig
from .vtkio import write_vtk

# Annotation values published for the corresponding configurations
# (P2 elements, unspecified mesh and horizon): order of magnitude context,
# never pass/fail digits.
PUBLISHED_ERR_POISEUILLE = {
    0.05: 0.00627107,
    0.10: 0.0133008,
    0.15: 0.0212144,
    0.20: 0.0279855,
}
PUBLISHED_ERR_EXACT = {
    0.05: 0.000690316,
    0.10: 0.00134943,
    0.15: 0.00204638,
    0.20: 0.00267697,
}
PUBLISHED_ERR_NU = {
    0.005: 0.00195359,
    0.01: 0.00267697,
    0.05: 0.00323477,
    0.1: 0.010308,
}

RESULTS_HEADER = [
    "config_id",
    "delta_over_r1",
    "nu",
    "profile",
    "linf_rel_err",
    "linf_abs_err",
    "floor",
    "nodes",
    "h",
    "t_mesh_s",
    "t_psi_s",
    "t_transport_s",
]
TIMING_COLUMNS = {"t_mesh_s", "t_psi_s", "t_transport_s", "t_metrics_s"}


class ConfigError(ValueError):
    """Raised for malformed configuration files or values."""


@dataclass
class ExperimentConfig:
    """Everything one sweep needs, overridable from a config file or flags."""

    r_main: float = 1.0
    r_seg: float = 0.6
    channel_length: float = 0.5
    entrance_width: float = 0.45
    boundary_density: float = 200.0
    deltas: tuple = (0.05, 0.10, 0.15, 0.20)  # interface widths / r_main
    nus: tuple = (0.005, 0.01, 0.05, 0.1)  # diffusivity sweep values
    nu: float = 0.01
    theta0: float = 1.0
    depth: float = 1.0
    horizon: float = 5.0
    nsteps: int = 200
    target_h: float = 0.02
    channel_pitch: float | None = 0.00125  # structured channel lattice pitch
    profile: str = PROFILE_EXACT_POINTWISE  # pipeline profile
    supg: bool = True
    supg_parameter: float = 1.0
    floor: float = 1e-3
    outdir: str = "out"
    workers: int = 1
    seed: int = 0  # reserved; no solver consumes randomness

    def __post_init__(self):
        if not self.deltas:
            raise ConfigError("delta sweep list is empty")
        if not self.nus:
            raise ConfigError("nu sweep list is empty")
        if any(d <= 0 for d in self.deltas):
            raise ConfigError("interface widths must be positive")
        if any(v <= 0 for v in self.nus) or self.nu <= 0:
            raise ConfigError("diffusivities must be positive")
        if self.profile not in ALL_PROFILES:
            raise ConfigError(f"unknown profile kind {self.profile!r}")
        if self.target_h <= 0:
            raise ConfigError("mesh size must be positive")
        if self.channel_pitch is not None and not 0.0 < self.channel_pitch <= self.target_h:
            raise ConfigError("channel pitch must lie in (0, mesh size]")
        if self.nsteps < 1:
            raise ConfigError("need at least one time step")
        if self.workers < 1:
            raise ConfigError("need at least one worker")
        if self.theta0 < 0:
            raise ConfigError("water supply rate must be nonnegative")


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _parse_optional_float(text: str):
    if text.strip().lower() in ("none", "off", ""):
        return None
    return float(text)


def _parse_float_list(text: str) -> tuple:
    parts = [p for chunk in text.split(",") for p in chunk.split()]
    if not parts:
        raise ConfigError("empty list value")
    return tuple(float(p) for p in parts)


# dotted config key -> (ExperimentConfig field, parser)
CONFIG_KEYS = {
    "geometry.r_main": ("r_main", float),
    "geometry.r_seg": ("r_seg", float),
    "geometry.channel_length": ("channel_length", float),
    "geometry.entrance_width": ("entrance_width", float),
    "geometry.boundary_density": ("boundary_density", float),
    "sweep.delta_list": ("deltas", _parse_float_list),
    "sweep.nu_list": ("nus", _parse_float_list),
    "physics.nu": ("nu", float),
    "physics.theta0": ("theta0", float),
    "physics.depth": ("depth", float),
    "transport.horizon": ("horizon", float),
    "transport.nsteps": ("nsteps", int),
    "transport.supg": ("supg", _parse_bool),
    "transport.supg_parameter": ("supg_parameter", float),
    "mesh.h": ("target_h", float),
    "mesh.channel_pitch": ("channel_pitch", _parse_optional_float),
    "error.floor": ("floor", float),
    "run.profile": ("profile", str),
    "run.out": ("outdir", str),
    "run.workers": ("workers", int),
    "run.seed": ("seed", int),
}


def parse_config_text(text: str) -> dict:
    """Flat ``section.key = value`` lines to a field-name keyed dict."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        field_name, parser = CONFIG_KEYS[key]
        try:
            out[field_name] = parser(value)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    return out


def load_config(path: str | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Defaults, then the config file, then explicit field overrides."""
    values = {}
    if path is not None:
        with open(path) as f:
            values.update(parse_config_text(f.read()))
    for name, value in (overrides or {}).items():
        if value is None:
            continue
        if name not in {f.name for f in fields(ExperimentConfig)}:
            raise ConfigError(f"unknown config field {name!r}")
        values[name] = value
    return ExperimentConfig(**values)


def _case_payload(cfg: ExperimentConfig, table, delta_frac, nu, profiles) -> dict:
    return {
        "table": table,
        "delta_frac": float(delta_frac),
        "nu": float(nu),
        "profiles": tuple(profiles),
        "r_main": cfg.r_main,
        "r_seg": cfg.r_seg,
        "channel_length": cfg.channel_length,
        "entrance_width": cfg.entrance_width,
        "boundary_density": cfg.boundary_density,
        "theta0": cfg.theta0,
        "depth": cfg.depth,
        "horizon": cfg.horizon,
        "nsteps": cfg.nsteps,
        "h": cfg.target_h,
        "channel_pitch": cfg.channel_pitch,
        "supg": cfg.supg,
        "supg_parameter": cfg.supg_parameter,
        "floor": cfg.floor,
    }


def _run_case(payload: dict) -> list:
    """One sweep entry: reference plus one truncated run per profile kind."""
    p = payload
    delta = p["delta_frac"] * p["r_main"]
    geom = build_lagoon(
        GeometryParams(
            r_main=p["r_main"],
            r_seg=p["r_seg"],
            channel_length=p["channel_length"],
            delta=delta,
            entrance_width=p["entrance_width"],
            boundary_segments_per_unit=p["boundary_density"],
        )
    )
    t0 = time.perf_counter()
    cm = build_chamber_meshes(geom, target_h=p["h"], channel_pitch=p["channel_pitch"])
    t_mesh = time.perf_counter() - t0
    phys = PhysicalParams(theta0=p["theta0"], depth=p["depth"], nu=p["nu"], horizon=p["horizon"])
    tcfg = TransportConfig(
        horizon=p["horizon"],
        nsteps=p["nsteps"],
        nu=p["nu"],
        supg=p["supg"],
        supg_parameter=p["supg_parameter"],
    )
    t_ref = {}
    ref = reference_run(cm, phys, tcfg, timings=t_ref)
    ent_full = entrance_nodes(cm.full)
    ent_main = entrance_nodes(cm.main)
    area_full, area_main = cm.area_full, cm.area_main
    rows = []
    for kind in p["profiles"]:
        t_main = {}
        mr = main_run(cm, InterfaceProfile(kind, delta), phys, tcfg, ref=ref, timings=t_main)
        t1 = time.perf_counter()
        err = truncation_error(cm, ref, mr, floor=p["floor"])
        t_metrics = time.perf_counter() - t1
        rows.append(
            {
                "config_id": f"{p['table']}-d{p['delta_frac']:g}-nu{p['nu']:g}-{kind}",
                "delta_over_r1": p["delta_frac"],
                "nu": p["nu"],
                "profile": kind,
                "linf_rel_err": err.rel,
                "linf_abs_err": err.abs,
                "floor": err.floor,
                "nodes": len(cm.full.nodes),
                "h": p["h"],
                "t_mesh_s": t_mesh,
                "t_psi_s": t_ref.get("psi", 0.0) + t_main.get("psi", 0.0),
                "t_transport_s": t_ref.get("transport", 0.0) + t_main.get("transport", 0.0),
                "t_metrics_s": t_metrics,
                # diagnostics for the conservation and bounds checks
                "ref_imbalance": abs(ref.potential.balance["imbalance"]),
                "main_imbalance": abs(mr.potential.balance["imbalance"]),
                # entrance inflow = evaporation of the kept chamber + budget
                "split_imbalance": abs(
                    p["theta0"] * (area_full - area_main) - mr.flux_diag["budget"]
                ),
                "low_margin": min(ref.transport.low_margin, mr.transport.low_margin),
                "high_margin": max(ref.transport.high_margin, mr.transport.high_margin),
                # final clock value on the entrance must be written verbatim
                "dirichlet_exact": max(
                    float(np.abs(ref.transport.g[ent_full]).max()),
                    float(np.abs(mr.transport.g[ent_main]).max()),
                ),
                "flux_diag": dict(mr.flux_diag),
            }
        )
    return rows


def _dispatch(cfg: ExperimentConfig, payloads: list) -> list:
    if cfg.workers > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            nested = list(pool.map(_run_case, payloads))
    else:
        nested = [_run_case(p) for p in payloads]
    rows = [row for case in nested for row in case]
    rows.sort(key=lambda r: r["config_id"])
    return rows


def _published(table: dict, key: float):
    for k, v in table.items():
        if abs(k - key) <= 1e-9:
            return v
    return ""


def _fmt(value) -> str:
    if isinstance(value, float):
        # plain float repr round-trips; numpy scalars would print their type
        return repr(float(value))
    return str(value)


def _fmt_timing(value) -> str:
    return f"{value:.3f}"


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(
                [
                    _fmt_timing(row[c]) if c in TIMING_COLUMNS else _fmt(row.get(c, ""))
                    for c in header
                ]
            )


def write_results_csv(outdir, rows) -> str:
    """The master CSV: fixed column set, rows sorted by configuration id."""
    path = os.path.join(outdir, "results.csv")
    _write_csv(path, RESULTS_HEADER, sorted(rows, key=lambda r: r["config_id"]))
    return path


def run_table_uc(cfg: ExperimentConfig, write: bool = True) -> list:
    """Interface width sweep with the Poiseuille profile at the config nu."""
    payloads = [
        _case_payload(cfg, "uc", d, cfg.nu, (PROFILE_POISEUILLE,)) for d in cfg.deltas
    ]
    rows = _dispatch(cfg, payloads)
    for row in rows:
        row["published_err"] = _published(PUBLISHED_ERR_POISEUILLE, row["delta_over_r1"])
    if write:
        os.makedirs(cfg.outdir, exist_ok=True)
        header = RESULTS_HEADER + ["published_err", "t_metrics_s"]
        _write_csv(os.path.join(cfg.outdir, "table_uc.csv"), header, rows)
        write_results_csv(cfg.outdir, rows)
    return rows


def run_table_c(cfg: ExperimentConfig, write: bool = True) -> list:
    """Width sweep with the sampled exact profile and the error ratio.

    Each sweep entry also runs the Poiseuille companion on the same mesh and
    reference so the ratio compares like with like.
    """
    payloads = [
        _case_payload(cfg, "c", d, cfg.nu, (PROFILE_EXACT_POINTWISE, PROFILE_POISEUILLE))
        for d in cfg.deltas
    ]
    both = _dispatch(cfg, payloads)
    companions = {
        row["delta_over_r1"]: row for row in both if row["profile"] == PROFILE_POISEUILLE
    }
    rows = [row for row in both if row["profile"] == PROFILE_EXACT_POINTWISE]
    for row in rows:
        uc = companions[row["delta_over_r1"]]
        row["uc_err"] = uc["linf_rel_err"]
        row["ratio_to_uc"] = uc["linf_rel_err"] / row["linf_rel_err"]
        row["published_err"] = _published(PUBLISHED_ERR_EXACT, row["delta_over_r1"])
    if write:
        os.makedirs(cfg.outdir, exist_ok=True)
        header = RESULTS_HEADER + ["uc_err", "ratio_to_uc", "published_err", "t_metrics_s"]
        _write_csv(os.path.join(cfg.outdir, "table_c.csv"), header, rows)
        write_results_csv(cfg.outdir, rows)
    return rows


def run_table_diffusivity(cfg: ExperimentConfig, write: bool = True) -> list:
    """Diffusivity sweep at the widest interface with the exact profile."""
    delta = max(cfg.deltas)
    payloads = [
        _case_payload(cfg, "nu", delta, nu, (PROFILE_EXACT_POINTWISE,)) for nu in cfg.nus
    ]
    rows = _dispatch(cfg, payloads)
    rows.sort(key=lambda r: r["nu"])
    for row in rows:
        row["published_err"] = _published(PUBLISHED_ERR_NU, row["nu"])
    if write:
        os.makedirs(cfg.outdir, exist_ok=True)
        header = RESULTS_HEADER + ["published_err", "t_metrics_s"]
        _write_csv(os.path.join(cfg.outdir, "table_nu.csv"), header, rows)
        write_results_csv(cfg.outdir, rows)
    return rows


@dataclass
class PipelineResult:
    rows: list
    err_main: object
    err_concat: object
    err_seg: object
    g_concat: np.ndarray
    g_ref: np.ndarray


def run_full_pipeline(cfg: ExperimentConfig, write: bool = True) -> PipelineResult:
    """Reference, truncated main, and secondary chamber for one configuration.

    The main and secondary fields are concatenated over the full node set
    (they agree bit exactly on the interface via the trace coupling) and
    compared against the reference; the pipeline writes the four VTK field
    files plus results.csv.
    """
    delta_frac = cfg.deltas[0]
    delta = delta_frac * cfg.r_main
    geom = build_lagoon(
        GeometryParams(
            r_main=cfg.r_main,
            r_seg=cfg.r_seg,
            channel_length=cfg.channel_length,
            delta=delta,
            entrance_width=cfg.entrance_width,
            boundary_segments_per_unit=cfg.boundary_density,
        )
    )
    t0 = time.perf_counter()
    cm = build_chamber_meshes(geom, target_h=cfg.target_h, channel_pitch=cfg.channel_pitch)
    t_mesh = time.perf_counter() - t0
    phys = PhysicalParams(theta0=cfg.theta0, depth=cfg.depth, nu=cfg.nu, horizon=cfg.horizon)
    tcfg = TransportConfig(
        horizon=cfg.horizon,
        nsteps=cfg.nsteps,
        nu=cfg.nu,
        supg=cfg.supg,
        supg_parameter=cfg.supg_parameter,
    )
    timings = {}
    ref = reference_run(cm, phys, tcfg, timings=timings)
    profile = InterfaceProfile(cfg.profile, delta)
    mr = main_run(cm, profile, phys, tcfg, ref=ref, timings=timings)
    sr = seg_run(cm, mr, phys, tcfg, ref=ref, timings=timings)

    t1 = time.perf_counter()
    floor_abs = cfg.floor * cfg.horizon
    err_main = truncation_error(cm, ref, mr, floor=cfg.floor)
    err_seg = linf_error(
        sr.transport.g,
        ref.transport.g[cm.seg_nodes],
        floor_abs,
        parent_nodes=cm.seg_nodes,
    )
    g_concat = np.empty(len(cm.full.nodes))
    g_concat[cm.seg_nodes] = sr.transport.g
    g_concat[cm.main_nodes] = mr.transport.g
    err_concat = linf_error(g_concat, ref.transport.g, floor_abs)
    t_metrics = time.perf_counter() - t1

    diagnostics = {
        "ref_imbalance": abs(ref.potential.balance["imbalance"]),
        "main_imbalance": abs(mr.potential.balance["imbalance"]),
        "seg_imbalance": abs(sr.potential.balance["imbalance"]),
        "split_imbalance": abs(
            cfg.theta0 * (cm.area_full - cm.area_main) - mr.flux_diag["budget"]
        ),
        "low_margin": min(
            ref.transport.low_margin, mr.transport.low_margin, sr.transport.low_margin
        ),
        "high_margin": max(
            ref.transport.high_margin, mr.transport.high_margin, sr.transport.high_margin
        ),
        # entrance clock written verbatim; seg interface equals the main trace
        "dirichlet_exact": max(
            float(np.abs(ref.transport.g[entrance_nodes(cm.full)]).max()),
            float(np.abs(mr.transport.g[entrance_nodes(cm.main)]).max()),
            float(np.abs(sr.transport.g[interface_nodes(cm.seg)] - sr.trace[-1]).max()),
        ),
        "flux_diag": dict(mr.flux_diag),
    }

    def row(tag, err, nodes):
        return {
            "config_id": f"pipeline-{tag}-d{delta_frac:g}-nu{cfg.nu:g}-{cfg.profile}",
            "delta_over_r1": delta_frac,
            "nu": cfg.nu,
            "profile": cfg.profile,
            "linf_rel_err": err.rel,
            "linf_abs_err": err.abs,
            "floor": err.floor,
            "nodes": nodes,
            "h": cfg.target_h,
            "t_mesh_s": t_mesh,
            "t_psi_s": timings.get("psi", 0.0),
            "t_transport_s": timings.get("transport", 0.0),
            "t_metrics_s": t_metrics,
            **diagnostics,
        }

    rows = [
        row("main", err_main, len(cm.main.nodes)),
        row("concat", err_concat, len(cm.full.nodes)),
        row("seg", err_seg, len(cm.seg.nodes)),
    ]
    rows.sort(key=lambda r: r["config_id"])

    if write:
        os.makedirs(cfg.outdir, exist_ok=True)
        region = (np.asarray(cm.full.element_region) != REGION_MAIN).astype(float)
        write_vtk(
            os.path.join(cfg.outdir, "ref.vtk"),
            cm.full,
            point_scalars={"g": ref.transport.g, "psi": ref.potential.psi},
            cell_scalars={"region": region},
            cell_vectors={"u": ref.potential.u_elem},
            title="reference lagoon fields",
        )
        write_vtk(
            os.path.join(cfg.outdir, "main.vtk"),
            cm.main,
            point_scalars={"g": mr.transport.g, "psi": mr.potential.psi},
            cell_vectors={"u": mr.potential.u_elem},
            title="truncated main chamber fields",
        )
        write_vtk(
            os.path.join(cfg.outdir, "seg.vtk"),
            cm.seg,
            point_scalars={"g": sr.transport.g, "psi": sr.potential.psi},
            cell_vectors={"u": sr.potential.u_elem},
            title="secondary chamber fields",
        )
        write_vtk(
            os.path.join(cfg.outdir, "diff.vtk"),
            cm.full,
            point_scalars={
                "g_concat": g_concat,
                "g_ref": ref.transport.g,
                "diff": g_concat - ref.transport.g,
            },
            title="concatenated minus reference confinement",
        )
        write_results_csv(cfg.outdir, rows)
    return PipelineResult(
        rows=rows,
        err_main=err_main,
        err_concat=err_concat,
        err_seg=err_seg,
        g_concat=g_concat,
        g_ref=ref.transport.g,
    )


def run_all(cfg: ExperimentConfig) -> list:
    """All three tables plus the pipeline; one combined results.csv."""
    rows = []
    rows += run_table_uc(cfg)
    rows += run_table_c(cfg)
    rows += run_table_diffusivity(cfg)
    rows += run_full_pipeline(cfg).rows
    rows.sort(key=lambda r: r["config_id"])
    write_results_csv(cfg.outdir, rows)
    return rows

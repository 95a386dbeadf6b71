"""Command line front end for the lagoon truncation-error studies.

Each table of the error study is its own subcommand so a single
configuration can be reproduced in isolation; ``all`` chains every study
into one results.csv.  Flags mirror config-file keys and win over them.
"""

import argparse
import os
import sys

from .decomposition import build_chamber_meshes, reference_run
from .elliptic import PhysicalParams
from .experiments import (
    ConfigError,
    ExperimentConfig,
    load_config,
    run_full_pipeline,
    run_table_c,
    run_table_diffusivity,
    run_table_uc,
    run_all,
    _parse_float_list,
)
from .geometry import ALL_PROFILES, GeometryError, GeometryParams, build_lagoon
from .meshing import MeshError, quality_report, triangulate
from .sparselinalg import SolverError
from .transport import TransportConfig
from .vtkio import write_vtk


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paralic",
        description="confinement error studies for a truncated two-chamber lagoon",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("mesh", "generate the sweep meshes and print quality reports"),
        ("reference", "run the full-domain reference solve and dump fields"),
        ("table-uc", "interface width sweep, assumed Poiseuille profile"),
        ("table-c", "interface width sweep, sampled exact profile"),
        ("table-nu", "diffusivity sweep at the widest interface"),
        ("pipeline", "reference + truncated main + secondary chamber run"),
        ("all", "all tables plus the pipeline into one results.csv"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", metavar="PATH", help="key = value config file")
        p.add_argument("--out", metavar="DIR", help="output directory")
        p.add_argument("--h", type=float, metavar="FLOAT", help="target mesh size")
        p.add_argument(
            "--delta-list",
            metavar="CSV",
            help="comma separated interface widths as fractions of r_main",
        )
        p.add_argument("--nu-list", metavar="CSV", help="comma separated diffusivities")
        p.add_argument("--profile", choices=ALL_PROFILES, help="pipeline profile kind")
        p.add_argument("--workers", type=int, metavar="N", help="sweep worker processes")
    return parser


def _config_from_args(args) -> ExperimentConfig:
    overrides = {
        "outdir": args.out,
        "target_h": args.h,
        "deltas": _parse_float_list(args.delta_list) if args.delta_list else None,
        "nus": _parse_float_list(args.nu_list) if args.nu_list else None,
        "profile": args.profile,
        "workers": args.workers,
    }
    return load_config(args.config, overrides)


def _cmd_mesh(cfg: ExperimentConfig) -> None:
    os.makedirs(cfg.outdir, exist_ok=True)
    for frac in cfg.deltas:
        geom = build_lagoon(
            GeometryParams(
                r_main=cfg.r_main,
                r_seg=cfg.r_seg,
                channel_length=cfg.channel_length,
                delta=frac * cfg.r_main,
                entrance_width=cfg.entrance_width,
                boundary_segments_per_unit=cfg.boundary_density,
            )
        )
        mesh = triangulate(geom, cfg.target_h, channel_pitch=cfg.channel_pitch)
        rep = quality_report(mesh)
        rep["area_defect"] = abs(rep["area"] - geom.areas["omega"])
        path = os.path.join(cfg.outdir, f"mesh_d{frac:g}.vtk")
        write_vtk(path, mesh, title=f"lagoon mesh, delta/r1 = {frac:g}")
        stats = " ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in rep.items())
        print(f"mesh delta={frac:g} {stats} file={path}")


def _cmd_reference(cfg: ExperimentConfig) -> None:
    os.makedirs(cfg.outdir, exist_ok=True)
    frac = cfg.deltas[0]
    geom = build_lagoon(
        GeometryParams(
            r_main=cfg.r_main,
            r_seg=cfg.r_seg,
            channel_length=cfg.channel_length,
            delta=frac * cfg.r_main,
            entrance_width=cfg.entrance_width,
            boundary_segments_per_unit=cfg.boundary_density,
        )
    )
    cm = build_chamber_meshes(geom, cfg.target_h, channel_pitch=cfg.channel_pitch)
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
    path = os.path.join(cfg.outdir, "ref.vtk")
    write_vtk(
        path,
        cm.full,
        point_scalars={"g": ref.transport.g, "psi": ref.potential.psi},
        cell_vectors={"u": ref.potential.u_elem},
        title="reference lagoon fields",
    )
    print(
        f"reference delta={frac:g} nu={cfg.nu:g} nodes={len(cm.full.nodes)}"
        f" imbalance={abs(ref.potential.balance['imbalance']):.3e}"
        f" t_psi_s={timings.get('psi', 0.0):.3f}"
        f" t_transport_s={timings.get('transport', 0.0):.3f} file={path}"
    )


def _print_rows(rows) -> None:
    for row in rows:
        print(
            f"{row['config_id']} rel={row['linf_rel_err']:.8f}"
            f" abs={row['linf_abs_err']:.8f} nodes={row['nodes']}"
        )


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        if args.command == "mesh":
            _cmd_mesh(cfg)
        elif args.command == "reference":
            _cmd_reference(cfg)
        elif args.command == "table-uc":
            _print_rows(run_table_uc(cfg))
        elif args.command == "table-c":
            _print_rows(run_table_c(cfg))
        elif args.command == "table-nu":
            _print_rows(run_table_diffusivity(cfg))
        elif args.command == "pipeline":
            _print_rows(run_full_pipeline(cfg).rows)
        else:
            _print_rows(run_all(cfg))
    except (ConfigError, GeometryError, MeshError, SolverError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

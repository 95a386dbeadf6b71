"""Acceptance gate: one test per shipping criterion of the truncation study.

The heavy fixtures run the full default experiment matrix (all tables plus
the pipeline) twice, and the three tables once more with a doubled renewal
horizon.  Everything downstream asserts on those shared results, so the
whole gate costs three sweeps regardless of how many criteria read them.
Published values from the original study are annotations, never targets;
every tolerance below is part of the ship contract.
"""

import csv
import math
import time
from dataclasses import replace

import numpy as np
import pytest

from paralic import (
    ExperimentConfig,
    GeometryParams,
    InterfaceProfile,
    PhysicalParams,
    PROFILE_EXACT_VARIATIONAL,
    REGION_MAIN,
    build_chamber_meshes,
    build_entrance_flux,
    build_lagoon,
    interface_flux_data,
    rectangle_mesh,
    run_all,
    solve_potential,
)
from paralic.decomposition import ReferenceRun, _merge_flux
from paralic.experiments import (
    TIMING_COLUMNS,
    run_table_c,
    run_table_diffusivity,
    run_table_uc,
)
from paralic.fem import integrate, load_vector, mass_matrix, stiffness_matrix
from paralic.sparselinalg import cg_solve

BALANCE_TOL = 1e-10  # criterion: every compatibility identity
BOUND_FRACTION = 0.01  # criterion: tracer inside [T - tau - 0.01 T, T + 0.01 T]
TABLE_BUDGET_S = 900.0  # criterion: each table study under 15 minutes


def _case_cost(rows):
    return sum(
        r["t_mesh_s"] + r["t_psi_s"] + r["t_transport_s"] + r["t_metrics_s"]
        for r in rows
    )


def _table(rows, prefix):
    return [r for r in rows if r["config_id"].startswith(prefix + "-")]


@pytest.fixture(scope="session")
def run_first(tmp_path_factory):
    cfg = ExperimentConfig(outdir=str(tmp_path_factory.mktemp("acc_a")))
    return cfg, run_all(cfg)


@pytest.fixture(scope="session")
def run_second(tmp_path_factory):
    cfg = ExperimentConfig(outdir=str(tmp_path_factory.mktemp("acc_b")))
    return cfg, run_all(cfg)


@pytest.fixture(scope="session")
def run_double_horizon(run_first):
    # same step count, so the time step scales with the horizon
    cfg = replace(run_first[0], horizon=2.0 * run_first[0].horizon)
    rows = []
    rows += run_table_uc(cfg, write=False)
    rows += run_table_c(cfg, write=False)
    rows += run_table_diffusivity(cfg, write=False)
    return cfg, rows


def test_criterion_1_manufactured_solution_convergence():
    # psi = cos(pi x) cos(pi y) solves -lap psi = theta with zero Neumann
    # data on the unit square; P1 must converge at second order in L2
    t0 = time.perf_counter()

    def theta(x, y):
        return 2.0 * math.pi**2 * np.cos(math.pi * x) * np.cos(math.pi * y)

    errs, hs = [], []
    for h in (0.08, 0.04, 0.02):
        nx = int(round(1.0 / h))
        m = rectangle_mesh(nx, nx)
        k = stiffness_matrix(m.nodes, m.tris)
        b = load_vector(m.nodes, m.tris, theta)
        psi, info = cg_solve(k, b, tol=1e-12, deflate_mean=True)
        assert info.converged
        exact = np.cos(math.pi * m.nodes[:, 0]) * np.cos(math.pi * m.nodes[:, 1])
        diff = psi - exact
        diff -= integrate(m.nodes, m.tris, diff)  # unit area: mean alignment
        mm = mass_matrix(m.nodes, m.tris)
        errs.append(math.sqrt(diff @ (mm @ diff)))
        hs.append(1.0 / nx)
    rate = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
    elapsed = time.perf_counter() - t0
    assert 1.8 <= rate <= 2.2, f"L2 rate {rate:.3f} outside [1.8, 2.2]"
    assert elapsed < 30.0, f"convergence study took {elapsed:.1f}s"


def test_criterion_2_variational_flux_reproduces_reference():
    # the consistent interface flux must make the truncated chamber solve
    # reproduce the reference potential node-wise, for every channel width
    t0 = time.perf_counter()
    cfg = ExperimentConfig()
    phys = PhysicalParams(theta0=cfg.theta0, depth=cfg.depth, nu=cfg.nu)
    worst = 0.0
    for dfrac in cfg.deltas:
        geom = build_lagoon(GeometryParams(delta=dfrac * cfg.r_main))
        cm = build_chamber_meshes(geom, cfg.target_h, channel_pitch=cfg.channel_pitch)
        pot = solve_potential(
            cm.full, build_entrance_flux(cm.full, phys.theta0, cm.area_full), phys
        )
        ref = ReferenceRun(potential=pot, transport=None)
        prof = InterfaceProfile(PROFILE_EXACT_VARIATIONAL, dfrac * cfg.r_main)
        iflux, _ = interface_flux_data(cm, prof, phys, REGION_MAIN, ref)
        flux = _merge_flux(build_entrance_flux(cm.main, phys.theta0, cm.area_full), iflux)
        mpot = solve_potential(cm.main, flux, phys)
        d = mpot.psi - pot.psi[cm.main_nodes]
        d -= d.mean()
        worst = max(worst, float(np.abs(d).max()))
    elapsed = time.perf_counter() - t0
    assert worst <= 1e-8, f"potential reproduction error {worst:.3e} above 1e-8"
    assert elapsed < 120.0, f"reproduction study took {elapsed:.1f}s"


def test_criterion_3_error_grows_with_interface_width(run_first):
    cfg, rows = run_first
    uc = sorted(_table(rows, "uc"), key=lambda r: r["delta_over_r1"])
    assert [r["delta_over_r1"] for r in uc] == [0.05, 0.10, 0.15, 0.20]
    errs = [r["linf_rel_err"] for r in uc]
    assert all(a < b for a, b in zip(errs, errs[1:])), f"not increasing: {errs}"
    assert 0.005 <= errs[-1] <= 0.15, f"widest-channel error {errs[-1]:.4f} out of band"
    assert _case_cost(uc) < TABLE_BUDGET_S


def test_criterion_4_exact_profile_beats_assumed_profile(run_first):
    cfg, rows = run_first
    c = sorted(_table(rows, "c"), key=lambda r: r["delta_over_r1"])
    assert [r["delta_over_r1"] for r in c] == [0.05, 0.10, 0.15, 0.20]
    errs = [r["linf_rel_err"] for r in c]
    assert all(a < b for a, b in zip(errs, errs[1:])), f"not increasing: {errs}"
    for r in c:
        assert r["ratio_to_uc"] >= 3.0, (
            f"delta={r['delta_over_r1']}: exact profile only "
            f"{r['ratio_to_uc']:.2f}x better"
        )
    assert _case_cost(c) < TABLE_BUDGET_S


def test_criterion_5_error_grows_with_diffusivity(run_first):
    cfg, rows = run_first
    nu = sorted(_table(rows, "nu"), key=lambda r: r["nu"])
    assert [r["nu"] for r in nu] == [0.005, 0.01, 0.05, 0.1]
    assert all(r["delta_over_r1"] == 0.2 for r in nu)
    errs = [r["linf_rel_err"] for r in nu]
    assert all(a < b for a, b in zip(errs, errs[1:])), f"not increasing: {errs}"
    assert _case_cost(nu) < TABLE_BUDGET_S


def test_criterion_6_conservation_identities(run_first, run_double_horizon):
    for _, rows in (run_first, run_double_horizon):
        for r in rows:
            cid = r["config_id"]
            assert r["ref_imbalance"] <= BALANCE_TOL, cid
            assert r["main_imbalance"] <= BALANCE_TOL, cid
            assert r["split_imbalance"] <= BALANCE_TOL, cid
            if "seg_imbalance" in r:
                assert r["seg_imbalance"] <= BALANCE_TOL, cid


def test_criterion_7_tracer_bounds_and_exact_dirichlet(run_first, run_double_horizon):
    for cfg, rows in (run_first, run_double_horizon):
        slack = BOUND_FRACTION * cfg.horizon
        for r in rows:
            cid = r["config_id"]
            assert r["low_margin"] >= -slack, f"{cid}: low {r['low_margin']:.3e}"
            assert r["high_margin"] <= slack, f"{cid}: high {r['high_margin']:.3e}"
            assert r["dirichlet_exact"] == 0.0, cid


def _rows_without_timings(path):
    with open(path, newline="") as f:
        data = list(csv.reader(f))
    keep = [i for i, name in enumerate(data[0]) if name not in TIMING_COLUMNS]
    return [[row[i] for i in keep] for row in data]


def test_criterion_8_repeated_runs_are_identical(run_first, run_second):
    a = _rows_without_timings(run_first[0].outdir + "/results.csv")
    b = _rows_without_timings(run_second[0].outdir + "/results.csv")
    assert a == b


def test_criterion_9_robust_to_doubling_the_horizon(run_first, run_double_horizon):
    _, rows1 = run_first
    _, rows2 = run_double_horizon
    for prefix, key in (("uc", "delta_over_r1"), ("c", "delta_over_r1"), ("nu", "nu")):
        t1 = sorted(_table(rows1, prefix), key=lambda r: r[key])
        t2 = sorted(_table(rows2, prefix), key=lambda r: r[key])
        assert [r[key] for r in t1] == [r[key] for r in t2]
        e1 = np.array([r["linf_rel_err"] for r in t1])
        e2 = np.array([r["linf_rel_err"] for r in t2])
        assert np.array_equal(np.argsort(e1), np.argsort(e2)), f"{prefix} reordered"
        change = np.abs(e2 - e1) / e1
        assert change.max() <= 0.20, f"{prefix}: error drifted {change.max():.2%}"

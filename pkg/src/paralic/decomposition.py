"""Two chamber decomposition of the lagoon at the channel interface.

The full domain run is the reference.  The truncated (main chamber) run
replaces the secondary chamber by an outgoing interface flux F with
int_Gamma F ds = theta0 |Omega_seg|, shaped by one of four profiles:

    poiseuille          parabolic no slip profile 6 s (delta - s) / delta^3
    constant            uniform 1 / delta
    exact-pointwise     per edge normal velocities sampled from the
                        reference flow, rescaled to the exact budget
    exact-variational   nodal fluxes that make the truncated discrete
                        problem reproduce the reference potential verbatim

The secondary chamber is then re-solved with the negated interface flux and
the recorded time trace of the truncated confinement field as its interface
Dirichlet data.  Errors between truncated and reference confinement are
measured in a floored relative max norm over the chamber nodes.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from .elliptic import (
    FluxData,
    PhysicalParams,
    PotentialSolution,
    build_entrance_flux,
    solve_potential,
)
from .fem import load_vector, stiffness_matrix
from .geometry import (
    GAMMA_IN,
    GAMMA_INTERFACE,
    PROFILE_EXACT_POINTWISE,
    PROFILE_EXACT_VARIATIONAL,
    REGION_MAIN,
    REGION_SEG,
    InterfaceProfile,
    LagoonGeometry,
    profile_weight,
)
from .meshing import TriMesh, extract_submesh, triangulate
from .transport import TransportConfig, TransportResult, run_confinement


@dataclass
class ChamberMeshes:
    """Full lagoon mesh with its two chamber submeshes and injections."""

    geom: LagoonGeometry
    full: TriMesh
    main: TriMesh
    main_nodes: np.ndarray  # main submesh node -> full mesh node
    main_tris: np.ndarray
    seg: TriMesh
    seg_nodes: np.ndarray
    seg_tris: np.ndarray

    @property
    def area_full(self) -> float:
        return math.fsum(self.full.tri_areas().tolist())

    @property
    def area_main(self) -> float:
        return math.fsum(self.main.tri_areas().tolist())

    @property
    def area_seg(self) -> float:
        return math.fsum(self.seg.tri_areas().tolist())


def build_chamber_meshes(
    geom: LagoonGeometry, target_h: float, channel_pitch: float | None = None
) -> ChamberMeshes:
    full = triangulate(geom, target_h, channel_pitch=channel_pitch)
    main, mn, mt = extract_submesh(full, REGION_MAIN)
    seg, sn, st = extract_submesh(full, REGION_SEG)
    return ChamberMeshes(
        geom=geom, full=full, main=main, main_nodes=mn, main_tris=mt,
        seg=seg, seg_nodes=sn, seg_tris=st,
    )


def interface_nodes(mesh: TriMesh) -> np.ndarray:
    return np.unique(mesh.edges_of(GAMMA_INTERFACE))


def entrance_nodes(mesh: TriMesh) -> np.ndarray:
    return np.unique(mesh.edges_of(GAMMA_IN))


@dataclass
class ReferenceRun:
    potential: PotentialSolution
    transport: TransportResult


def reference_run(
    cm: ChamberMeshes,
    phys: PhysicalParams,
    tcfg: TransportConfig,
    psi_tol: float = 1e-10,
    timings: dict | None = None,
) -> ReferenceRun:
    """Full domain circulation and confinement.

    ``timings``, when given, accumulates wall clock seconds under the keys
    "psi" and "transport".
    """
    flux = build_entrance_flux(cm.full, phys.theta0, cm.area_full)
    t0 = time.perf_counter()
    pot = solve_potential(cm.full, flux, phys, tol=psi_tol)
    t1 = time.perf_counter()
    tr = run_confinement(cm.full, pot.u_elem, tcfg)
    t2 = time.perf_counter()
    if timings is not None:
        timings["psi"] = timings.get("psi", 0.0) + (t1 - t0)
        timings["transport"] = timings.get("transport", 0.0) + (t2 - t1)
    return ReferenceRun(potential=pot, transport=tr)


def _merge_flux(*parts: FluxData) -> FluxData:
    densities = {}
    edge_values = {}
    nodal = None
    for f in parts:
        for k, v in f.densities.items():
            if k in densities or k in edge_values:
                raise ValueError(f"duplicate flux data for {k!r}")
            densities[k] = v
        for k, v in f.edge_values.items():
            if k in densities or k in edge_values:
                raise ValueError(f"duplicate flux data for {k!r}")
            edge_values[k] = v
        if f.nodal is not None:
            nodal = f.nodal.copy() if nodal is None else nodal + f.nodal
    return FluxData(densities=densities, edge_values=edge_values, nodal=nodal)


def _interface_edge_elements(cm: ChamberMeshes, region: str) -> np.ndarray:
    """For each full mesh interface edge, the adjacent element on one side."""
    n = len(cm.full.nodes)
    tris = cm.full.tris
    sel = np.nonzero(cm.full.element_region == region)[0]
    lookup = {}
    for t in sel:
        a, b, c = tris[t]
        for i, j in ((a, b), (b, c), (c, a)):
            lo, hi = (i, j) if i < j else (j, i)
            lookup[lo * n + hi] = t
    edges = cm.full.edges_of(GAMMA_INTERFACE)
    out = np.empty(len(edges), dtype=np.int64)
    for k, (i, j) in enumerate(edges):
        lo, hi = (i, j) if i < j else (j, i)
        key = lo * n + hi
        if key not in lookup:
            raise ValueError("interface edge without an adjacent element")
        out[k] = lookup[key]
    return out


def pointwise_interface_flux(
    cm: ChamberMeshes, ref: ReferenceRun, phys: PhysicalParams
) -> tuple:
    """Per edge outgoing flux densities sampled from the reference flow.

    The main side element velocity normal to the interface (the main to seg
    direction is +y) gives the raw density; a single multiplicative factor
    rescales the lot so the integrated budget matches theta0 |Omega_seg|
    exactly.  Returns (per edge densities, diagnostics).
    """
    q_seg = phys.theta0 * cm.area_seg
    elems = _interface_edge_elements(cm, REGION_MAIN)
    raw = phys.depth * ref.potential.u_elem[elems, 1]
    edges = cm.full.edges_of(GAMMA_INTERFACE)
    if q_seg == 0.0:
        return np.zeros(len(edges)), {"scale": 1.0, "raw_total": 0.0, "budget": 0.0}
    ln = cm.full.edge_lengths(edges)
    raw_total = math.fsum((raw * ln).tolist())
    if raw_total <= 0:
        raise ValueError("reference flow does not feed the secondary chamber")
    scale = q_seg / raw_total
    return raw * scale, {"scale": scale, "raw_total": raw_total, "budget": q_seg}


def variational_interface_flux(
    cm: ChamberMeshes, ref: ReferenceRun, phys: PhysicalParams
) -> tuple:
    """Nodal interface fluxes consistent with the discrete reference problem.

    lambda = K_main psi_ref|main - b_main on the interface nodes, where
    K_main and b_main are the truncated chamber operator and load without
    any interface data.  Adding lambda as nodal flux makes the truncated
    solve reproduce psi_ref|main up to solver tolerance, and the lambdas
    sum to the exact budget theta0 |Omega_seg| by construction.
    """
    sub = cm.main
    k = stiffness_matrix(sub.nodes, sub.tris, coeff=np.full(len(sub.tris), phys.depth))
    b = load_vector(sub.nodes, sub.tris, phys.theta0)
    b += build_entrance_flux(sub, phys.theta0, cm.area_full).assemble(sub)
    resid = k @ ref.potential.psi[cm.main_nodes] - b
    gamma = interface_nodes(sub)
    lam = np.zeros(len(sub.nodes))
    lam[gamma] = resid[gamma]
    diag = {
        "budget": phys.theta0 * cm.area_seg,
        "total": math.fsum(lam[gamma].tolist()),
        "interior_residual": float(np.abs(np.delete(resid, gamma)).max()),
    }
    return lam, diag


def interface_flux_data(
    cm: ChamberMeshes,
    profile: InterfaceProfile,
    phys: PhysicalParams,
    side: str,
    ref: ReferenceRun | None = None,
) -> tuple:
    """Interface FluxData for one chamber submesh (side Main or Seg).

    The flux is out positive for the main chamber and the exact negative
    for the secondary chamber, so the pair is conservative by construction.
    """
    sign = 1.0 if side == REGION_MAIN else -1.0
    sub = cm.main if side == REGION_MAIN else cm.seg
    q_seg = phys.theta0 * cm.area_seg
    geom = cm.geom
    if profile.is_analytic:

        def density(x, y, _s=sign, _q=q_seg, _p=profile):
            s = geom.interface_arc_coordinate(x)
            return _s * _q * profile_weight(_p, s)

        return FluxData(densities={GAMMA_INTERFACE: density}), {"budget": q_seg}
    if ref is None:
        raise ValueError(f"profile {profile.kind!r} needs a reference run")
    if profile.kind == PROFILE_EXACT_POINTWISE:
        q_edges, diag = pointwise_interface_flux(cm, ref, phys)
        return FluxData(edge_values={GAMMA_INTERFACE: sign * q_edges}), diag
    if profile.kind == PROFILE_EXACT_VARIATIONAL:
        lam, diag = variational_interface_flux(cm, ref, phys)
        if side == REGION_MAIN:
            return FluxData(nodal=lam), diag
        # map the main submesh nodal data onto the seg submesh numbering
        parent = np.full(len(cm.full.nodes), 0.0)
        parent[cm.main_nodes] = lam
        return FluxData(nodal=-parent[cm.seg_nodes]), diag
    raise ValueError(f"unknown profile kind {profile.kind!r}")


@dataclass
class TruncatedRun:
    profile: InterfaceProfile
    potential: PotentialSolution
    transport: TransportResult
    trace: np.ndarray  # (nsteps + 1, n_gamma) confinement at interface nodes
    gamma_parent: np.ndarray  # full mesh node ids of the trace columns
    flux_diag: dict


def main_run(
    cm: ChamberMeshes,
    profile: InterfaceProfile,
    phys: PhysicalParams,
    tcfg: TransportConfig,
    ref: ReferenceRun | None = None,
    psi_tol: float = 1e-10,
    timings: dict | None = None,
) -> TruncatedRun:
    """Truncated main chamber with a modeled interface outflux.

    The entrance keeps the full domain inflow (it still feeds both
    chambers); the interface carries the modeled outflux.  The confinement
    run imposes the entrance clock ramp and leaves the interface natural
    (advective outflow, no diffusive flux), recording the interface trace
    for the secondary chamber coupling.
    """
    sub = cm.main
    iflux, diag = interface_flux_data(cm, profile, phys, REGION_MAIN, ref)
    flux = _merge_flux(build_entrance_flux(sub, phys.theta0, cm.area_full), iflux)
    t0 = time.perf_counter()
    pot = solve_potential(sub, flux, phys, tol=psi_tol)
    t1 = time.perf_counter()

    gamma = interface_nodes(sub)
    trace = np.empty((tcfg.nsteps + 1, len(gamma)))

    def record(step, tau, g):
        trace[step] = g[gamma]

    tr = run_confinement(sub, pot.u_elem, tcfg, on_step=record)
    if timings is not None:
        timings["psi"] = timings.get("psi", 0.0) + (t1 - t0)
        timings["transport"] = timings.get("transport", 0.0) + (time.perf_counter() - t1)
    return TruncatedRun(
        profile=profile,
        potential=pot,
        transport=tr,
        trace=trace,
        gamma_parent=cm.main_nodes[gamma],
        flux_diag=diag,
    )


def seg_run(
    cm: ChamberMeshes,
    main: TruncatedRun,
    phys: PhysicalParams,
    tcfg: TransportConfig,
    ref: ReferenceRun | None = None,
    psi_tol: float = 1e-10,
    timings: dict | None = None,
) -> TruncatedRun:
    """Secondary chamber driven by the truncated run's interface data.

    The interface influx is the exact negative of the main chamber outflux
    and the confinement field inherits the recorded main side trace as a
    per step Dirichlet condition, bit exact on the shared nodes.
    """
    sub = cm.seg
    iflux, diag = interface_flux_data(cm, main.profile, phys, REGION_SEG, ref)
    t0 = time.perf_counter()
    pot = solve_potential(sub, iflux, phys, tol=psi_tol)
    t1 = time.perf_counter()

    gamma = interface_nodes(sub)
    parent = cm.seg_nodes[gamma]
    order = _match_columns(main.gamma_parent, parent)
    values = main.trace[:, order]
    tr = run_confinement(sub, pot.u_elem, tcfg, node_dirichlet=[(gamma, values)])
    if timings is not None:
        timings["psi"] = timings.get("psi", 0.0) + (t1 - t0)
        timings["transport"] = timings.get("transport", 0.0) + (time.perf_counter() - t1)
    return TruncatedRun(
        profile=main.profile,
        potential=pot,
        transport=tr,
        trace=values,
        gamma_parent=parent,
        flux_diag=diag,
    )


def _match_columns(have: np.ndarray, want: np.ndarray) -> np.ndarray:
    pos = {int(p): i for i, p in enumerate(have)}
    try:
        return np.array([pos[int(p)] for p in want], dtype=np.int64)
    except KeyError:
        raise ValueError("interface node sets of the two chambers differ") from None


@dataclass
class ErrorStats:
    rel: float  # floored relative max error
    abs: float  # plain max error
    rel_node: int  # parent node achieving the relative max
    abs_node: int
    floor: float  # absolute floor on |reference| for the relative norm
    masked: int  # nodes excluded by the floor


def linf_error(g, g_ref, floor_abs: float, parent_nodes=None) -> ErrorStats:
    """Max norm error of g vs g_ref with a floored relative variant.

    Nodes where |g_ref| <= floor_abs are excluded from the relative norm
    (the confinement vanishes at the entrance, where a ratio would blow up)
    but still count for the absolute norm.
    """
    g = np.asarray(g, float)
    g_ref = np.asarray(g_ref, float)
    if parent_nodes is None:
        parent_nodes = np.arange(len(g))
    diff = np.abs(g - g_ref)
    i_abs = int(diff.argmax())
    mask = np.abs(g_ref) > floor_abs
    if not mask.any():
        raise ValueError("floor excludes every node from the relative error")
    rel_all = np.where(mask, diff / np.where(mask, np.abs(g_ref), 1.0), -1.0)
    i_rel = int(rel_all.argmax())
    return ErrorStats(
        rel=float(rel_all[i_rel]),
        abs=float(diff[i_abs]),
        rel_node=int(parent_nodes[i_rel]),
        abs_node=int(parent_nodes[i_abs]),
        floor=float(floor_abs),
        masked=int((~mask).sum()),
    )


def truncation_error(
    cm: ChamberMeshes,
    ref: ReferenceRun,
    main: TruncatedRun,
    floor: float = 1e-3,
) -> ErrorStats:
    """Confinement error of the truncated chamber against the reference."""
    g_ref = ref.transport.g[cm.main_nodes]
    floor_abs = floor * main.transport.taus[-1]
    return linf_error(main.transport.g, g_ref, floor_abs, parent_nodes=cm.main_nodes)

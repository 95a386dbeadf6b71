"""Confinement tracer transport.

The confinement field is obtained from the backward renewal tracer g,

    dg/dtau + u . grad g - nu lap g = 0,    g(0, .) = T,
    g = T - tau   on the entrance (fresh marine water carries the clock),

integrated to tau = T with implicit Euler; g(T, .) is the confinement time.
Spatial discretization is P1 with consistent mass and optional streamline
(SUPG) stabilization; the per step systems share one matrix and are solved
with Jacobi BiCGStab warm started from the previous step.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .fem import advection_matrix, mass_matrix, stiffness_matrix, supg_matrices
from .geometry import GAMMA_IN
from .meshing import TriMesh
from .sparselinalg import bicgstab_solve


@dataclass(frozen=True)
class TransportConfig:
    """Time stepping, boundary label sets and stabilization controls.

    Labels in ``dirichlet_segments`` carry the clock ramp g = T - tau; those
    in ``neumann_segments`` (and any unlisted boundary) get the natural zero
    diffusive flux treatment, which needs no assembled term.
    """

    horizon: float = 5.0
    nsteps: int = 200
    nu: float = 0.01
    dirichlet_segments: tuple = (GAMMA_IN,)
    neumann_segments: tuple = ()
    supg: bool = True
    supg_parameter: float = 1.0
    tol: float = 1e-10

    def __post_init__(self):
        if self.horizon <= 0 or self.nsteps < 1:
            raise ValueError("need horizon > 0 and nsteps >= 1")
        if self.nu < 0:
            raise ValueError("diffusivity cannot be negative")
        if self.supg_parameter < 0:
            raise ValueError("supg_parameter cannot be negative")
        overlap = set(self.dirichlet_segments) & set(self.neumann_segments)
        if overlap:
            raise ValueError(f"labels in both segment sets: {sorted(overlap)}")

    @property
    def dt(self) -> float:
        return self.horizon / self.nsteps


@dataclass
class TransportResult:
    g: np.ndarray  # confinement field g(T, .)
    taus: np.ndarray  # (nsteps + 1,) time grid
    low_margin: float  # min over steps/nodes of g - (T - tau)
    high_margin: float  # max over steps/nodes of g - T
    age_rate_margin: float  # max over steps/nodes of g_next - g_prev - dt
    max_peclet: float
    total_iterations: int
    worst_residual: float


def _element_diameters(mesh: TriMesh) -> np.ndarray:
    p = mesh.nodes[mesh.tris]
    el = np.stack(
        [
            np.hypot(*(p[:, 1] - p[:, 0]).T),
            np.hypot(*(p[:, 2] - p[:, 1]).T),
            np.hypot(*(p[:, 0] - p[:, 2]).T),
        ],
        axis=1,
    )
    return el.max(axis=1)


def supg_tau(mesh: TriMesh, u_elem, dt: float, parameter: float = 1.0) -> np.ndarray:
    """Element stabilization time tau = c h / (2|u|), capped by the step."""
    h = _element_diameters(mesh)
    unorm = np.hypot(*np.asarray(u_elem, float).T)
    with np.errstate(divide="ignore"):
        tau = parameter * h / (2.0 * unorm)
    return np.minimum(np.where(np.isfinite(tau), tau, dt), dt)


def max_cell_peclet(mesh: TriMesh, u_elem, nu: float) -> float:
    h = _element_diameters(mesh)
    unorm = np.hypot(*np.asarray(u_elem, float).T)
    if nu == 0:
        return math.inf if unorm.max() > 0 else 0.0
    return float((unorm * h).max() / (2.0 * nu))


def _system_matrices(mesh: TriMesh, u_elem, cfg: TransportConfig):
    """One step system A = M_tot + dt (C + nu K [+ SUPG]) and M_tot."""
    m = mass_matrix(mesh.nodes, mesh.tris)
    k = stiffness_matrix(mesh.nodes, mesh.tris)
    c = advection_matrix(mesh.nodes, mesh.tris, u_elem)
    if cfg.supg:
        tau_e = supg_tau(mesh, u_elem, cfg.dt, cfg.supg_parameter)
        s_adv, s_mass = supg_matrices(mesh.nodes, mesh.tris, u_elem, tau_e)
        m_tot = (m + s_mass).tocsr()
        a = (m_tot + cfg.dt * (c + s_adv + cfg.nu * k)).tocsr()
    else:
        m_tot = m.tocsr()
        a = (m_tot + cfg.dt * (c + cfg.nu * k)).tocsr()
    return a, m_tot


def _dirichlet_sets(mesh: TriMesh, cfg: TransportConfig, node_dirichlet):
    """Combined (nodes, value spec) list: labeled clock ramps plus extras."""
    ramp_nodes = [np.unique(mesh.edges_of(lab)) for lab in cfg.dirichlet_segments]
    ramp_nodes = [nd for nd in ramp_nodes if len(nd)]
    sets = []
    if ramp_nodes:
        def ramp(tau, _t=cfg.horizon):
            return _t - tau

        sets.append((np.unique(np.concatenate(ramp_nodes)), ramp))
    for nodes, spec in node_dirichlet or []:
        sets.append((np.asarray(nodes, dtype=np.int64), spec))
    if sets:
        allnodes = np.concatenate([nd for nd, _ in sets])
        if len(np.unique(allnodes)) != len(allnodes):
            raise ValueError("overlapping Dirichlet node sets")
    return sets


def _dirichlet_value(spec, step: int, tau: float, count: int) -> np.ndarray:
    if callable(spec):
        v = spec(tau)
    else:
        v = np.asarray(spec)[step]
    return np.broadcast_to(np.asarray(v, float), (count,)).copy()


def _pin_rows(a, nodes, n):
    is_dir = np.zeros(n, bool)
    is_dir[nodes] = True
    keep = sp.diags((~is_dir).astype(float))
    pin = sp.diags(is_dir.astype(float))
    return (keep @ a + pin).tocsr()


def assemble_transport_step(
    mesh: TriMesh,
    u_elem,
    cfg: TransportConfig,
    g_prev,
    step: int = 1,
    node_dirichlet=None,
):
    """One implicit Euler step as an explicit linear system (a, rhs).

    Row i of ``a`` is replaced by the identity on Dirichlet nodes and the
    rhs there carries the prescribed value at the step's end time.
    """
    a, m_tot = _system_matrices(mesh, u_elem, cfg)
    sets = _dirichlet_sets(mesh, cfg, node_dirichlet)
    rhs = m_tot @ np.asarray(g_prev, float)
    tau = step * cfg.dt
    if sets:
        dir_nodes = np.concatenate([nd for nd, _ in sets])
        a = _pin_rows(a, dir_nodes, len(mesh.nodes))
        for nodes, spec in sets:
            rhs[nodes] = _dirichlet_value(spec, step, tau, len(nodes))
    return a, rhs


def run_confinement(
    mesh: TriMesh,
    u_elem,
    cfg: TransportConfig,
    node_dirichlet=None,
    on_step=None,
    g0=None,
) -> TransportResult:
    """March g from g = T (or a supplied g0) to tau = T.

    ``node_dirichlet`` adds explicit (nodes, value) pairs on top of the
    labeled ramp segments; a value is a callable of tau or an array indexed
    by step (rows 0..nsteps aligned with the time grid).  Prescribed values
    are written into the solution verbatim, so they hold bit exactly.
    ``on_step(step, tau, g)`` is invoked on the initial state and after
    every step.
    """
    n = len(mesh.nodes)
    dt = cfg.dt
    taus = np.linspace(0.0, cfg.horizon, cfg.nsteps + 1)

    pe = max_cell_peclet(mesh, u_elem, cfg.nu)
    if not cfg.supg and pe > 10.0:
        warnings.warn(
            f"cell Peclet {pe:.1f} > 10 without stabilization; expect oscillations",
            RuntimeWarning,
            stacklevel=2,
        )

    a, m_tot = _system_matrices(mesh, u_elem, cfg)
    sets = _dirichlet_sets(mesh, cfg, node_dirichlet)
    if sets:
        a = _pin_rows(a, np.concatenate([nd for nd, _ in sets]), n)

    g = np.full(n, float(cfg.horizon)) if g0 is None else np.array(g0, float)
    for nodes, spec in sets:
        g[nodes] = _dirichlet_value(spec, 0, 0.0, len(nodes))
    if on_step is not None:
        on_step(0, 0.0, g)

    low = float((g - cfg.horizon).min()) if n else 0.0
    high = float((g - cfg.horizon).max()) if n else 0.0
    age = -math.inf
    iters = 0
    worst = 0.0
    for step in range(1, cfg.nsteps + 1):
        tau = taus[step]
        rhs = m_tot @ g
        for nodes, spec in sets:
            rhs[nodes] = _dirichlet_value(spec, step, tau, len(nodes))
        g_prev = g
        g, info = bicgstab_solve(a, rhs, tol=cfg.tol, x0=g)
        for nodes, spec in sets:
            g[nodes] = _dirichlet_value(spec, step, tau, len(nodes))
        iters += info.iterations
        worst = max(worst, info.relative_residual)
        low = min(low, float((g - (cfg.horizon - tau)).min()))
        high = max(high, float((g - cfg.horizon).max()))
        age = max(age, float((g - g_prev).max()) - dt)
        if on_step is not None:
            on_step(step, tau, g)
    return TransportResult(
        g=g,
        taus=taus,
        low_margin=low,
        high_margin=high,
        age_rate_margin=age,
        max_peclet=pe,
        total_iterations=iters,
        worst_residual=worst,
    )

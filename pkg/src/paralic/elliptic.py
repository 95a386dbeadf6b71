"""Velocity potential of the evaporation driven circulation.

The depth integrated flow is u = grad(psi) with

    div((h - b) grad psi) = -theta        in the domain,
    (h - b) dpsi/dn      = q              on the boundary (out positive),

so water lost to evaporation at rate theta per unit area is resupplied
through the open boundary parts.  Compatibility requires the signed balance
int(theta) + sum of boundary fluxes = 0, which every flux builder here
satisfies identically.  The discrete operator is the depth weighted P1
stiffness matrix with the constants nullspace deflated in the solver.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .fem import edge_load_vector, elementwise_gradient, load_vector, stiffness_matrix
from .geometry import GAMMA_IN
from .meshing import TriMesh
from .sparselinalg import SolveInfo, cg_solve


@dataclass(frozen=True)
class PhysicalParams:
    """Water balance and tracer constants; lengths are in units of r_main."""

    theta0: float = 1.0  # evaporation rate per unit area
    depth: float = 1.0  # water column height h - b, constant
    nu: float = 0.01  # tracer diffusivity
    horizon: float = 5.0  # renewal horizon T for the confinement field

    def __post_init__(self):
        if self.theta0 < 0 or self.depth <= 0:
            raise ValueError("need theta0 >= 0 and depth > 0")
        if self.nu < 0 or self.horizon <= 0:
            raise ValueError("need nu >= 0 and horizon > 0")


@dataclass
class FluxData:
    """Neumann data q (out positive, depth included) on labeled edge sets.

    Three layerable representations:
      * densities:   label -> q(x, y) callable, integrated by 2 point Gauss
      * edge_values: label -> per edge constants (aligned with edges_of)
      * nodal:       ready made nodal loads (variationally consistent data)
    """

    densities: dict = field(default_factory=dict)
    edge_values: dict = field(default_factory=dict)
    nodal: np.ndarray | None = None

    def assemble(self, mesh: TriMesh) -> np.ndarray:
        n = len(mesh.nodes)
        out = np.zeros(n)
        for label, q in self.densities.items():
            out += edge_load_vector(mesh.nodes, mesh.edges_of(label), q, n)
        for label, qe in self.edge_values.items():
            out += edge_load_vector(mesh.nodes, mesh.edges_of(label), qe, n)
        if self.nodal is not None:
            out += self.nodal
        return out

    def total(self, mesh: TriMesh) -> float:
        """Signed boundary inflow/outflow sum of all carried data."""
        parts = []
        for label, q in self.densities.items():
            v = edge_load_vector(mesh.nodes, mesh.edges_of(label), q, len(mesh.nodes))
            parts.extend(v.tolist())
        for label, qe in self.edge_values.items():
            e = mesh.edges_of(label)
            ln = mesh.edge_lengths(e)
            qe = np.broadcast_to(np.asarray(qe, float), (len(e),))
            parts.extend((ln * qe).tolist())
        if self.nodal is not None:
            parts.extend(self.nodal.tolist())
        return math.fsum(parts)


def entrance_flux_density(theta0: float, supplied_area: float, entrance_length: float) -> float:
    """Constant inflow density on the entrance feeding the given area."""
    return -theta0 * supplied_area / entrance_length


def build_entrance_flux(mesh: TriMesh, theta0: float, supplied_area: float) -> FluxData:
    """Uniform entrance inflow balancing evaporation over ``supplied_area``.

    The same density is used for full domain and truncated runs (there the
    supplied area is still the full lagoon, since the entrance feeds both
    chambers).
    """
    e = mesh.edges_of(GAMMA_IN)
    if len(e) == 0:
        raise ValueError("mesh has no entrance edges")
    length = math.fsum(mesh.edge_lengths(e).tolist())
    q = entrance_flux_density(theta0, supplied_area, length)
    return FluxData(edge_values={GAMMA_IN: np.full(len(e), q)})


@dataclass
class PotentialSolution:
    psi: np.ndarray  # zero mean nodal potential
    u_elem: np.ndarray  # per element velocity grad(psi)
    info: SolveInfo
    balance: dict  # source/boundary bookkeeping


def solve_potential(
    mesh: TriMesh,
    flux: FluxData,
    phys: PhysicalParams,
    tol: float = 1e-10,
) -> PotentialSolution:
    """Zero mean potential from evaporation sources and boundary fluxes."""
    k = stiffness_matrix(mesh.nodes, mesh.tris, coeff=np.full(len(mesh.tris), phys.depth))
    b_src = load_vector(mesh.nodes, mesh.tris, phys.theta0)
    b_flux = flux.assemble(mesh)
    psi, info = cg_solve(k, b_src + b_flux, tol=tol, deflate_mean=True)
    u = elementwise_gradient(mesh.nodes, mesh.tris, psi)

    source = phys.theta0 * math.fsum(mesh.tri_areas().tolist())
    boundary = flux.total(mesh)
    balance = {
        "source": source,
        "boundary": boundary,
        "imbalance": source + boundary,
        "compatibility_error": info.compatibility_error,
    }
    return PotentialSolution(psi=psi, u_elem=u, info=info, balance=balance)

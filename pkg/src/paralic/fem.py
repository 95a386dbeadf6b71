"""P1 (linear triangle) finite element kernels.

All assembly routines are vectorized over elements and return CSR matrices
or nodal vectors.  Basis gradients are constant per element:
grad lambda_i = rot(p_{i+1} - p_{i+2}) / (2 A) with rot(v) = (v_y, -v_x).
"""

import math

import numpy as np

from .sparselinalg import assemble_csr


def tri_geometry(nodes, tris):
    """Signed areas (positive for CCW) and basis gradients, per element."""
    p = nodes[tris]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    area = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    if np.any(area <= 0):
        raise ValueError("mesh contains non-CCW or degenerate triangles")
    grads = np.empty((len(tris), 3, 2))
    for i in range(3):
        e = p[:, (i + 1) % 3] - p[:, (i + 2) % 3]
        grads[:, i, 0] = e[:, 1]
        grads[:, i, 1] = -e[:, 0]
    grads /= (2.0 * area)[:, None, None]
    return area, grads


def _scatter(tris, local, n):
    """Assemble per-element 3x3 blocks into a global CSR matrix."""
    m = len(tris)
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    return assemble_csr(rows, cols, local.reshape(m * 9), n)


def stiffness_matrix(nodes, tris, coeff=None):
    """K_ij = sum_K c_K A_K grad(l_i) . grad(l_j); coeff is per element."""
    area, grads = tri_geometry(nodes, tris)
    c = area if coeff is None else area * np.asarray(coeff, float)
    local = np.einsum("kid,kjd,k->kij", grads, grads, c)
    return _scatter(tris, local, len(nodes))


def mass_matrix(nodes, tris):
    """Consistent mass: M^K = A/12 (1 + delta_ij)."""
    area, _ = tri_geometry(nodes, tris)
    base = (np.ones((3, 3)) + np.eye(3)) / 12.0
    local = area[:, None, None] * base[None, :, :]
    return _scatter(tris, local, len(nodes))


def advection_matrix(nodes, tris, u_elem):
    """C_ij = int phi_i (u . grad phi_j) with u constant per element."""
    area, grads = tri_geometry(nodes, tris)
    udg = np.einsum("kjd,kd->kj", grads, np.asarray(u_elem, float))
    local = (area / 3.0)[:, None, None] * udg[:, None, :] * np.ones((1, 3, 1))
    return _scatter(tris, local, len(nodes))


def supg_matrices(nodes, tris, u_elem, tau_elem):
    """Streamline stabilization blocks for the advection equation.

    Returns (S, Smass):
        S_ij     = tau A (u . grad l_i)(u . grad l_j)   (advection term)
        Smass_ij = tau (u . grad l_i) A/3               (time derivative term)
    """
    area, grads = tri_geometry(nodes, tris)
    udg = np.einsum("kjd,kd->kj", grads, np.asarray(u_elem, float))
    tau = np.asarray(tau_elem, float)
    s = np.einsum("ki,kj,k->kij", udg, udg, tau * area)
    smass = (tau * area / 3.0)[:, None, None] * udg[:, :, None] * np.ones((1, 1, 3))
    n = len(nodes)
    return _scatter(tris, s, n), _scatter(tris, smass, n)


def load_vector(nodes, tris, f):
    """Nodal vector int f phi_i by the degree 2 edge midpoint rule.

    ``f`` is a callable of (x, y) arrays or a scalar.
    """
    area, _ = tri_geometry(nodes, tris)
    p = nodes[tris]
    n = len(nodes)
    out = np.zeros(n)
    if np.isscalar(f):
        fv = float(f)
        for i in range(3):
            np.add.at(out, tris[:, i], fv * area / 3.0)
        return out
    mids = [0.5 * (p[:, (i + 1) % 3] + p[:, (i + 2) % 3]) for i in range(3)]
    fm = [np.asarray(f(m[:, 0], m[:, 1]), float) for m in mids]
    # basis i is 1/2 at the two midpoints of its adjacent edges, 0 opposite
    for i in range(3):
        contrib = (area / 3.0) * 0.5 * (fm[(i + 1) % 3] + fm[(i + 2) % 3])
        np.add.at(out, tris[:, i], contrib)
    return out


_GAUSS2 = (0.5 * (1.0 - 1.0 / math.sqrt(3.0)), 0.5 * (1.0 + 1.0 / math.sqrt(3.0)))


def edge_load_vector(nodes, edges, q, n=None):
    """Nodal vector of the boundary term int_e q phi_i by 2 point Gauss.

    ``q`` is a callable of (x, y) arrays, or an array of per edge constants,
    or a scalar.  Exact for flux densities linear along each edge.
    """
    edges = np.asarray(edges)
    if n is None:
        n = len(nodes)
    out = np.zeros(n)
    if len(edges) == 0:
        return out
    a = nodes[edges[:, 0]]
    b = nodes[edges[:, 1]]
    ln = np.hypot(*(b - a).T)
    if callable(q):
        for t in _GAUSS2:
            x = a + t * (b - a)
            qv = np.asarray(q(x[:, 0], x[:, 1]), float)
            w = 0.5 * ln * qv
            np.add.at(out, edges[:, 0], w * (1.0 - t))
            np.add.at(out, edges[:, 1], w * t)
    else:
        qe = np.broadcast_to(np.asarray(q, float), (len(edges),))
        half = 0.5 * ln * qe
        np.add.at(out, edges[:, 0], half)
        np.add.at(out, edges[:, 1], half)
    return out


def elementwise_gradient(nodes, tris, v):
    """Per element gradient of a P1 field."""
    _, grads = tri_geometry(nodes, tris)
    return np.einsum("kid,ki->kd", grads, np.asarray(v, float)[tris])


def integrate(nodes, tris, v) -> float:
    """Integral of a nodal P1 field (exact)."""
    area, _ = tri_geometry(nodes, tris)
    vmean = np.asarray(v, float)[tris].mean(axis=1)
    return float(math.fsum((area * vmean).tolist()))

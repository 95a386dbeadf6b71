"""Triangular meshing of the lagoon with an embedded channel interface.

The mesh is generated on the half domain x >= 0 with the symmetry seam and
the interface half-chord as constrained edges, refined Ruppert style
(encroached-segment splits plus circumcenter insertion, batched per round on
top of scipy's Delaunay), then mirrored about x = 0.  The result is bit
exact mirror symmetric and conforming to the interface, so the two chamber
submeshes are literal element subsets of the full mesh.
"""

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from .geometry import (
    GAMMA_IN,
    GAMMA_INTERFACE,
    GAMMA_ZERO,
    REGION_MAIN,
    REGION_SEG,
    LagoonGeometry,
)

SEAM = "Seam"


class MeshError(RuntimeError):
    """Raised when refinement fails to reach the requested mesh quality."""


def _cross2(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


@dataclass
class TriMesh:
    """Conforming triangle mesh with labeled constrained edges.

    ``edges[k]`` is a node pair lying on the labeled 1d skeleton (domain
    boundary or internal interface); everything else is unconstrained.
    ``element_region[t]`` tags each triangle with its chamber.
    """

    nodes: np.ndarray  # (n, 2) float
    tris: np.ndarray  # (m, 3) int, CCW
    edges: np.ndarray  # (k, 2) int
    edge_labels: np.ndarray  # (k,) str
    element_region: np.ndarray  # (m,) str

    def edges_of(self, label) -> np.ndarray:
        return self.edges[self.edge_labels == label]

    def tri_areas(self) -> np.ndarray:
        p = self.nodes[self.tris]
        return 0.5 * _cross2(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])

    def edge_lengths(self, edges) -> np.ndarray:
        d = self.nodes[edges[:, 1]] - self.nodes[edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    def all_edges(self) -> np.ndarray:
        """Unique undirected edges of the triangulation."""
        e = np.vstack([self.tris[:, [0, 1]], self.tris[:, [1, 2]], self.tris[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0)

    def angles_deg(self) -> np.ndarray:
        return _tri_angles(self.nodes, self.tris) * (180.0 / math.pi)


def quality_report(mesh: TriMesh) -> dict:
    """Node/element counts, edge length range, angle range, total area."""
    ang = mesh.angles_deg()
    e = mesh.all_edges()
    ln = mesh.edge_lengths(e)
    return {
        "nodes": len(mesh.nodes),
        "triangles": len(mesh.tris),
        "edges": len(e),
        "h_min": float(ln.min()),
        "h_max": float(ln.max()),
        "min_angle_deg": float(ang.min()),
        "max_angle_deg": float(ang.max()),
        "area": float(math.fsum(mesh.tri_areas().tolist())),
    }


def _tri_angles(nodes, tris):
    p = nodes[tris]
    ang = np.empty((len(tris), 3))
    for k in range(3):
        a = p[:, (k + 1) % 3] - p[:, k]
        b = p[:, (k + 2) % 3] - p[:, k]
        num = a[:, 0] * b[:, 0] + a[:, 1] * b[:, 1]
        den = np.hypot(a[:, 0], a[:, 1]) * np.hypot(b[:, 0], b[:, 1])
        ang[:, k] = np.arccos(np.clip(num / den, -1.0, 1.0))
    return ang


def _circumcenters(nodes, tris):
    p = nodes[tris]
    a, b, c = p[:, 0], p[:, 1], p[:, 2]
    ab = b - a
    ac = c - a
    d = 2.0 * (ab[:, 0] * ac[:, 1] - ab[:, 1] * ac[:, 0])
    d = np.where(np.abs(d) < 1e-300, 1e-300, d)
    ab2 = ab[:, 0] ** 2 + ab[:, 1] ** 2
    ac2 = ac[:, 0] ** 2 + ac[:, 1] ** 2
    ux = (ac[:, 1] * ab2 - ab[:, 1] * ac2) / d
    uy = (ab[:, 0] * ac2 - ac[:, 0] * ab2) / d
    cc = a + np.column_stack((ux, uy))
    r = np.hypot(ux, uy)
    return cc, r


class _Front:
    """Growing point cloud plus constrained segment bookkeeping."""

    def __init__(self):
        self.points = []
        self.index = {}
        self.segs = []  # [i, j] node index pairs
        self.seg_labels = []

    def add_point(self, xy):
        key = (float(xy[0]), float(xy[1]))
        k = self.index.get(key)
        if k is None:
            k = len(self.points)
            self.points.append(key)
            self.index[key] = k
        return k

    def add_chain(self, label, verts):
        idx = [self.add_point(v) for v in verts]
        for a, b in zip(idx[:-1], idx[1:]):
            self.segs.append([a, b])
            self.seg_labels.append(label)

    def split_segment(self, k):
        a, b = self.segs[k]
        pa = self.points[a]
        pb = self.points[b]
        m = self.add_point((0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])))
        lab = self.seg_labels[k]
        self.segs[k] = [a, m]
        self.segs.append([m, b])
        self.seg_labels.append(lab)

    def seg_points(self):
        pts = np.asarray(self.points)
        segs = np.asarray(self.segs)
        return pts, segs


def _split_long_segments(front, hmax):
    # repeated midpoint splits keep every vertex on the original polyline
    changed = True
    while changed:
        changed = False
        pts = np.asarray(front.points)
        segs = np.asarray(front.segs)
        d = pts[segs[:, 1]] - pts[segs[:, 0]]
        ln = np.hypot(d[:, 0], d[:, 1])
        for k in np.nonzero(ln > hmax)[0]:
            front.split_segment(int(k))
            changed = True


def _seed_lattice(front, geom, h, xmax, ymin, ymax, exclude_half_band=0.0):
    """Interior points on a triangular lattice, kept clear of the skeleton."""
    s = 0.95 * h
    dy = s * math.sqrt(3.0) / 2.0
    rows = []
    ny = int(math.ceil((ymax - ymin) / dy))
    nx = int(math.ceil(xmax / s))
    for j in range(ny + 1):
        y = ymin + j * dy
        off = 0.25 * s if j % 2 else -0.25 * s
        x = off + s * np.arange(nx + 2)
        rows.append(np.column_stack((x, np.full_like(x, y))))
    pts = np.vstack(rows)
    pts = pts[pts[:, 0] > 0.45 * h]
    if exclude_half_band > 0.0:
        # leave the channel band to the structured lattice and grading
        pts = pts[np.abs(pts[:, 1]) > exclude_half_band]
    margin = geom.signed_margin(pts)
    pts = pts[margin > 0.55 * h]
    if not len(pts):
        return
    spts, segs = front.seg_points()
    mid = 0.5 * (spts[segs[:, 0]] + spts[segs[:, 1]])
    half = 0.5 * np.hypot(*(spts[segs[:, 1]] - spts[segs[:, 0]]).T)
    tree = cKDTree(mid)
    kq = min(len(mid), 16)
    dist, idx = tree.query(pts, k=kq)
    if kq == 1:
        dist = dist[:, None]
        idx = idx[:, None]
    keep = np.ones(len(pts), bool)
    for j in range(kq):
        near = dist[:, j] < 0.55 * h + half[idx[:, j]]
        if not near.any():
            continue
        d = _point_segment_distance(
            pts[near], spts[segs[idx[near, j], 0]], spts[segs[idx[near, j], 1]]
        )
        bad = d < 0.55 * h
        w = np.nonzero(near)[0][bad]
        keep[w] = False
    for p in pts[keep]:
        front.add_point((p[0], p[1]))


def _point_segment_distance(p, a, b):
    ab = b - a
    den = np.maximum(ab[:, 0] ** 2 + ab[:, 1] ** 2, 1e-300)
    t = ((p - a) * ab).sum(axis=1) / den
    t = np.clip(t, 0.0, 1.0)
    foot = a + t[:, None] * ab
    return np.hypot(*(p - foot).T)


def _edge_key(i, j, n):
    lo = np.minimum(i, j).astype(np.int64)
    hi = np.maximum(i, j).astype(np.int64)
    return lo * n + hi


def _classify_inside(tri, segs, seeds, points):
    """BFS over triangle adjacency, never crossing a constrained edge."""
    nt = len(tri.simplices)
    n = len(points)
    con = set(_edge_key(segs[:, 0], segs[:, 1], n).tolist())
    inside = np.zeros(nt, bool)
    start = tri.find_simplex(seeds)
    if np.any(start < 0):
        raise MeshError("classification seed fell outside the triangulation")
    queue = deque(int(t) for t in start)
    for t in start:
        inside[int(t)] = True
    simp = tri.simplices
    neigh = tri.neighbors
    while queue:
        t = queue.popleft()
        for k in range(3):
            u = neigh[t, k]
            if u < 0 or inside[u]:
                continue
            a = simp[t, (k + 1) % 3]
            b = simp[t, (k + 2) % 3]
            if _edge_key(np.int64(a), np.int64(b), n) in con:
                continue
            inside[u] = True
            queue.append(u)
    return inside


def _greedy_separate(cand, radius, priority, existing_tree):
    """Accept candidates worst first, enforcing mutual and existing clearance."""
    order = np.argsort(-priority, kind="stable")
    d_exist, _ = existing_tree.query(cand)
    ok = d_exist >= 0.5 * radius
    tree = cKDTree(cand)
    neigh = tree.query_ball_point(cand, 2.0 * radius.max())
    accepted = np.zeros(len(cand), bool)
    for i in order:
        if not ok[i]:
            continue
        good = True
        for j in neigh[i]:
            if accepted[j] and np.hypot(*(cand[i] - cand[j])) < min(radius[i], radius[j]):
                good = False
                break
        if good:
            accepted[i] = True
    return accepted


def _refine_half(front, geom, h, min_angle_deg, max_rounds=200):
    """Delaunay refinement loop on the half domain point set."""
    min_angle = math.radians(min_angle_deg)
    seeds = None
    tri = None
    inside = None
    for _ in range(max_rounds):
        pts, segs = front.seg_points()
        tri = Delaunay(pts)
        n = len(pts)

        # constraint recovery: a missing segment gets a midpoint vertex
        e = np.vstack(
            [tri.simplices[:, [0, 1]], tri.simplices[:, [1, 2]], tri.simplices[:, [2, 0]]]
        )
        have = set(_edge_key(e[:, 0], e[:, 1], n).tolist())
        missing = [
            k
            for k in range(len(segs))
            if _edge_key(np.int64(segs[k, 0]), np.int64(segs[k, 1]), n) not in have
        ]
        if missing:
            for k in missing:
                front.split_segment(k)
            continue

        if seeds is None:
            p = geom.params
            hl = p.channel_length / 2.0
            seeds = np.array(
                [
                    [p.delta / 4.0, geom.main_center[1]],
                    [p.delta / 4.0, geom.seg_center[1]],
                    [p.delta / 4.0, -hl / 2.0],
                    [p.delta / 4.0, +hl / 2.0],
                ]
            )
        inside = _classify_inside(tri, segs, seeds, pts)
        simp = tri.simplices[inside]

        ang = _tri_angles(pts, simp)
        p3 = pts[simp]
        el = np.stack(
            [
                np.hypot(*(p3[:, 1] - p3[:, 0]).T),
                np.hypot(*(p3[:, 2] - p3[:, 1]).T),
                np.hypot(*(p3[:, 0] - p3[:, 2]).T),
            ],
            axis=1,
        )
        bad = (el.max(axis=1) > 1.5 * h) | (ang.min(axis=1) < min_angle)
        if not bad.any():
            return tri, inside
        cc, rr = _circumcenters(pts, simp[bad])

        # candidates must stay inside and clear of the constrained skeleton
        margin_ok = (geom.signed_margin(cc) > 1e-9) & (cc[:, 0] > 1e-12)
        mid = 0.5 * (pts[segs[:, 0]] + pts[segs[:, 1]])
        half = 0.5 * np.hypot(*(pts[segs[:, 1]] - pts[segs[:, 0]]).T)
        stree = cKDTree(mid)
        kq = min(len(mid), 16)
        dist, idx = stree.query(cc, k=kq)
        if kq == 1:
            dist = dist[:, None]
            idx = idx[:, None]
        encroach = np.zeros(len(cc), bool)
        split_set = set()
        for j in range(kq):
            inball = dist[:, j] < half[idx[:, j]] * (1.0 + 1e-12)
            for i in np.nonzero(inball)[0]:
                encroach[i] = True
                if margin_ok[i]:
                    split_set.add(int(idx[i, j]))
        # an out-of-domain circumcenter splits the segment nearest to it
        for i in np.nonzero(~margin_ok)[0]:
            split_set.add(int(idx[i, 0]))

        insertable = margin_ok & ~encroach
        if insertable.any():
            cand = cc[insertable]
            rad = np.minimum(rr[insertable], 2.0 * h)
            prio = rr[insertable]
            accepted = _greedy_separate(cand, 0.9 * rad, prio, cKDTree(pts))
            for q in cand[accepted]:
                front.add_point((float(q[0]), float(q[1])))
        for k in sorted(split_set):
            front.split_segment(k)
        if not insertable.any() and not split_set:
            # nothing applicable this round: split the worst offenders directly
            worst = simp[bad][np.argsort(-rr)[: max(1, len(rr) // 4)]]
            for t in worst:
                q = pts[t].mean(axis=0)
                front.add_point((float(q[0]), float(q[1])))
    raise MeshError(f"refinement did not converge in {max_rounds} rounds")


def _mirror(pts, tris, segs, seg_labels):
    """Reflect the half mesh about x = 0, merging seam nodes."""
    n = len(pts)
    on_seam = pts[:, 0] == 0.0
    off = np.nonzero(~on_seam)[0]
    mirror_map = np.arange(n)
    mirror_map[off] = n + np.arange(len(off))
    mpts = pts[off].copy()
    mpts[:, 0] = -mpts[:, 0]
    nodes = np.vstack([pts, mpts])

    mtris = mirror_map[tris][:, ::-1]
    all_tris = np.vstack([tris, mtris])

    keep = seg_labels != SEAM
    e0 = segs[keep]
    l0 = seg_labels[keep]
    em = mirror_map[e0]
    # a fully seam-fixed mirrored edge would duplicate its original
    dup = (em == e0).all(axis=1)
    edges = np.vstack([e0, em[~dup]])
    labels = np.concatenate([l0, l0[~dup]])
    return nodes, all_tris, edges, labels


class _ChannelStrip:
    """Structured triangular lattice filling a band of the channel.

    The pitch is snapped so a whole number of cells spans the half width,
    giving every run of one geometry the same interface stencil: row 0 is
    the interface chord itself, odd rows are offset by half a cell, and
    even rows carry seam and wall vertices.  Row count is limited to a band
    around the chord; outside it the mesh grades back to the target size.
    """

    def __init__(self, geom, pitch, target_h):
        p = geom.params
        hw = p.delta / 2.0
        hl = p.channel_length / 2.0
        self.n = max(1, int(math.ceil(hw / pitch)))
        self.xs_even = hw * np.arange(self.n + 1) / self.n
        self.xs_even[0] = 0.0
        self.xs_even[-1] = hw  # exact ends so chain corners dedup
        self.xs_odd = hw * (np.arange(self.n) + 0.5) / self.n
        self.q = (hw / self.n) * (math.sqrt(3.0) / 2.0)
        band = min(0.06, hl - 2.0 * target_h)
        self.jmax = 2 * int(band // (2.0 * self.q)) if band > 0 else 0
        self.half_band = self.jmax * self.q

    def wall_ys(self):
        return [2 * m * self.q for m in range(1, self.jmax // 2 + 1)]

    def interior_points(self):
        for j in range(-self.jmax, self.jmax + 1):
            if j == 0:
                continue  # the interface chain owns row 0
            y = j * self.q
            xs = self.xs_even[1:-1] if j % 2 == 0 else self.xs_odd
            for x in xs:
                yield (float(x), float(y))


def triangulate(
    geom: LagoonGeometry,
    target_h: float,
    min_angle_deg: float = 20.0,
    channel_pitch: float | None = None,
) -> TriMesh:
    """Mesh the lagoon at the requested size with embedded interface.

    Works on the x >= 0 half with the seam constrained, then mirrors, so the
    node set is exactly symmetric and the interface chord y = 0 is covered
    by constrained edges shared between the two chamber element sets.  With
    ``channel_pitch`` set, the channel carries a structured lattice band of
    roughly that pitch around the interface.
    """
    if target_h <= 0:
        raise ValueError("target_h must be positive")
    if target_h >= geom.params.delta / 2.0:
        raise ValueError(
            "target_h must be smaller than half the channel width "
            f"(target_h={target_h:g}, delta={geom.params.delta:g})"
        )
    p = geom.params
    hl = p.channel_length / 2.0
    y_top = geom.seg_center[1] + p.r_seg
    hw = p.delta / 2.0

    strip = None
    if channel_pitch is not None:
        if not 0.0 < channel_pitch <= target_h:
            raise ValueError("channel_pitch must lie in (0, target_h]")
        strip = _ChannelStrip(geom, channel_pitch, target_h)

    front = _Front()
    for lab, verts in geom.half_chains:
        if strip is not None and len(verts) == 3 and (verts[:, 0] == hw).all():
            ys = strip.wall_ys()
            pre = [(hw, -hl)] + [(hw, -y) for y in reversed(ys)]
            post = [(hw, y) for y in ys] + [(hw, hl)]
            front.add_chain(lab, pre + [(hw, 0.0)] + post)
        else:
            front.add_chain(lab, [tuple(v) for v in verts])
    if strip is None:
        front.add_chain(SEAM, [(0.0, geom.entrance_y), (0.0, 0.0)])
        front.add_chain(SEAM, [(0.0, 0.0), (0.0, y_top)])
        front.add_chain(GAMMA_INTERFACE, [(0.0, 0.0), (hw, 0.0)])
    else:
        ys = strip.wall_ys()
        front.add_chain(
            SEAM,
            [(0.0, geom.entrance_y)] + [(0.0, -y) for y in reversed(ys)] + [(0.0, 0.0)],
        )
        front.add_chain(SEAM, [(0.0, 0.0)] + [(0.0, y) for y in ys] + [(0.0, y_top)])
        front.add_chain(GAMMA_INTERFACE, [(float(x), 0.0) for x in strip.xs_even])
        for xy in strip.interior_points():
            front.add_point(xy)
    _split_long_segments(front, target_h)
    exclude = strip.half_band + 1.5 * target_h if strip is not None else 0.0
    _seed_lattice(
        front, geom, target_h, p.r_main + target_h, geom.entrance_y, y_top, exclude
    )

    tri, inside = _refine_half(front, geom, target_h, min_angle_deg)
    pts, segs = front.seg_points()
    simp = tri.simplices[inside]

    # drop orphaned points, renumber, enforce CCW
    used = np.unique(simp)
    remap = -np.ones(len(pts), dtype=np.int64)
    remap[used] = np.arange(len(used))
    if np.any(remap[segs] < 0):
        raise MeshError("constrained segment lost from the triangulation")
    pts = pts[used]
    simp = remap[simp]
    segs = remap[segs]
    area2 = _cross2(pts[simp[:, 1]] - pts[simp[:, 0]], pts[simp[:, 2]] - pts[simp[:, 0]])
    flip = area2 < 0
    simp[flip] = simp[flip][:, ::-1]

    nodes, tris, edges, labels = _mirror(pts, simp, segs, np.asarray(front.seg_labels))
    cent_y = nodes[tris].mean(axis=1)[:, 1]
    region = np.where(cent_y < 0.0, REGION_MAIN, REGION_SEG)
    return TriMesh(
        nodes=nodes,
        tris=tris,
        edges=edges,
        edge_labels=labels,
        element_region=region,
    )


def rectangle_mesh(nx: int, ny: int, x0=0.0, y0=0.0, x1=1.0, y1=1.0) -> TriMesh:
    """Structured right-triangle mesh of a rectangle; sides labeled by name."""
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    nodes = np.column_stack([xx.ravel(), yy.ravel()])

    def nid(i, j):
        return i * (ny + 1) + j

    tris = []
    for i in range(nx):
        for j in range(ny):
            a, b = nid(i, j), nid(i + 1, j)
            c, d = nid(i + 1, j + 1), nid(i, j + 1)
            tris.append([a, b, c])
            tris.append([a, c, d])
    tris = np.asarray(tris)

    edges = []
    labels = []
    for j in range(ny):
        edges.append([nid(0, j), nid(0, j + 1)])
        labels.append("left")
        edges.append([nid(nx, j), nid(nx, j + 1)])
        labels.append("right")
    for i in range(nx):
        edges.append([nid(i, 0), nid(i + 1, 0)])
        labels.append("bottom")
        edges.append([nid(i, ny), nid(i + 1, ny)])
        labels.append("top")
    return TriMesh(
        nodes=nodes,
        tris=tris,
        edges=np.asarray(edges),
        edge_labels=np.asarray(labels),
        element_region=np.full(len(tris), REGION_MAIN),
    )


def extract_submesh(mesh: TriMesh, region: str):
    """Element subset of one chamber, renumbered, with injection maps.

    Returns (sub, node_map, tri_map) where ``node_map[i]`` is the parent
    node index of submesh node i and likewise ``tri_map`` for triangles.
    The interface edges become boundary edges of the submesh.
    """
    tri_map = np.nonzero(mesh.element_region == region)[0]
    sub_tris = mesh.tris[tri_map]
    node_map = np.unique(sub_tris)
    inv = -np.ones(len(mesh.nodes), dtype=np.int64)
    inv[node_map] = np.arange(len(node_map))

    # keep labeled edges that are edges of kept triangles
    e = np.vstack([sub_tris[:, [0, 1]], sub_tris[:, [1, 2]], sub_tris[:, [2, 0]]])
    have = set(_edge_key(e[:, 0], e[:, 1], len(mesh.nodes)).tolist())
    keys = _edge_key(mesh.edges[:, 0], mesh.edges[:, 1], len(mesh.nodes))
    keep = np.fromiter((k in have for k in keys.tolist()), bool, len(keys))

    sub = TriMesh(
        nodes=mesh.nodes[node_map].copy(),
        tris=inv[sub_tris],
        edges=inv[mesh.edges[keep]],
        edge_labels=mesh.edge_labels[keep].copy(),
        element_region=mesh.element_region[tri_map].copy(),
    )
    return sub, node_map, tri_map


def write_mesh(mesh: TriMesh, path) -> None:
    """Plain text dump (round trips exactly through read_mesh)."""
    with open(path, "w") as f:
        f.write("trimesh 1\n")
        f.write(f"nodes {len(mesh.nodes)}\n")
        for x, y in mesh.nodes:
            f.write(f"{float(x)!r} {float(y)!r}\n")
        f.write(f"triangles {len(mesh.tris)}\n")
        for (a, b, c), reg in zip(mesh.tris, mesh.element_region):
            f.write(f"{a} {b} {c} {reg}\n")
        f.write(f"edges {len(mesh.edges)}\n")
        for (a, b), lab in zip(mesh.edges, mesh.edge_labels):
            f.write(f"{a} {b} {lab}\n")


def read_mesh(path) -> TriMesh:
    with open(path) as f:
        tok = f.readline().split()
        if tok[:1] != ["trimesh"]:
            raise ValueError(f"{path}: not a mesh file")
        n = int(f.readline().split()[1])
        nodes = np.array([[float(v) for v in f.readline().split()] for _ in range(n)])
        m = int(f.readline().split()[1])
        tris = np.empty((m, 3), dtype=np.int64)
        region = np.empty(m, dtype="U8")
        for i in range(m):
            tok = f.readline().split()
            tris[i] = [int(v) for v in tok[:3]]
            region[i] = tok[3]
        k = int(f.readline().split()[1])
        edges = np.empty((k, 2), dtype=np.int64)
        labels = np.empty(k, dtype="U32")
        for i in range(k):
            tok = f.readline().split()
            edges[i] = [int(v) for v in tok[:2]]
            labels[i] = tok[2]
    return TriMesh(nodes=nodes, tris=tris, edges=edges, edge_labels=labels, element_region=region)

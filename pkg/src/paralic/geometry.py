"""Parameterized two-chamber lagoon geometry.

The domain is a large "main" disk joined to a smaller "secondary" disk by a
straight vertical channel of width ``delta``.  The channel mid-height line
y = 0 carries the internal interface between the two chambers; a horizontal
chord at the bottom of the main disk is the open-sea entrance.  Everything
is mirror symmetric about the vertical axis x = 0 by construction.

Boundary labels:
    GAMMA_IN        entrance chord (open sea)
    GAMMA_ZERO      coast (impermeable shore)
    GAMMA_INTERFACE internal interface at channel mid-height
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

GAMMA_IN = "GammaIn"
GAMMA_ZERO = "GammaZero"
GAMMA_INTERFACE = "GammaInterface"

REGION_MAIN = "Main"
REGION_SEG = "Seg"

PROFILE_POISEUILLE = "poiseuille"
PROFILE_CONSTANT = "constant"
PROFILE_EXACT_POINTWISE = "exact-pointwise"
PROFILE_EXACT_VARIATIONAL = "exact-variational"

_ANALYTIC_PROFILES = (PROFILE_POISEUILLE, PROFILE_CONSTANT)
ALL_PROFILES = _ANALYTIC_PROFILES + (PROFILE_EXACT_POINTWISE, PROFILE_EXACT_VARIATIONAL)


class GeometryError(ValueError):
    """Raised for parameter sets that do not produce a valid lagoon."""


@dataclass(frozen=True)
class GeometryParams:
    """Shape parameters of the two-chamber lagoon (lengths in main-radius units)."""

    r_main: float = 1.0
    r_seg: float = 0.6
    channel_length: float = 0.5
    delta: float = 0.2
    entrance_width: float = 0.45
    boundary_segments_per_unit: int = 200

    def __post_init__(self):
        if self.r_main <= 0 or self.r_seg <= 0:
            raise GeometryError("disk radii must be positive")
        if not 0 < self.delta < 2 * min(self.r_main, self.r_seg):
            raise GeometryError(
                f"degenerate channel: need 0 < delta < 2*min(r) "
                f"(delta={self.delta}, r_main={self.r_main}, r_seg={self.r_seg})"
            )
        if not 0 < self.entrance_width < 2 * self.r_main:
            raise GeometryError("entrance width must lie in (0, 2*r_main)")
        if self.channel_length <= 0:
            raise GeometryError("channel length must be positive")
        if self.boundary_segments_per_unit < 4:
            raise GeometryError("boundary density too coarse")


def _circle_cap_area(r, half_angle):
    # area of the circular cap cut off by a chord with given half-angle
    return r * r * (half_angle - math.sin(half_angle) * math.cos(half_angle))


def analytic_areas(params: GeometryParams) -> dict:
    """Closed-form areas of Omega, Omega_main and Omega_seg (caps + rectangles)."""
    p = params
    a_m = math.asin(p.delta / (2 * p.r_main))
    a_s = math.asin(p.delta / (2 * p.r_seg))
    beta = math.asin(p.entrance_width / (2 * p.r_main))
    half_chan = p.delta * p.channel_length / 2.0
    main = (
        math.pi * p.r_main**2
        - _circle_cap_area(p.r_main, a_m)
        - _circle_cap_area(p.r_main, beta)
        + half_chan
    )
    seg = math.pi * p.r_seg**2 - _circle_cap_area(p.r_seg, a_s) + half_chan
    return {"omega": main + seg, "main": main, "seg": seg}


def equal_area_params(params: GeometryParams) -> GeometryParams:
    """Adjust r_seg so the two chambers have equal area (|Omega_seg| = |Omega_main|)."""
    target = analytic_areas(params)["main"]

    def gap(r_seg):
        p = GeometryParams(
            r_main=params.r_main,
            r_seg=r_seg,
            channel_length=params.channel_length,
            delta=params.delta,
            entrance_width=params.entrance_width,
            boundary_segments_per_unit=params.boundary_segments_per_unit,
        )
        return analytic_areas(p)["seg"] - target

    lo = params.delta / 2 * (1 + 1e-9)
    hi = 4.0 * params.r_main
    r = brentq(gap, lo, hi, xtol=1e-14, rtol=1e-14)
    return GeometryParams(
        r_main=params.r_main,
        r_seg=r,
        channel_length=params.channel_length,
        delta=params.delta,
        entrance_width=params.entrance_width,
        boundary_segments_per_unit=params.boundary_segments_per_unit,
    )


def _arc_points(center, radius, ang0, ang1, density, p0, p1):
    """Sample the arc from ang0 to ang1 (radians, increasing), pinning exact endpoints."""
    arc_len = radius * abs(ang1 - ang0)
    n = max(2, int(math.ceil(arc_len * density)))
    ang = np.linspace(ang0, ang1, n + 1)
    pts = np.column_stack(
        (center[0] + radius * np.cos(ang), center[1] + radius * np.sin(ang))
    )
    pts[0] = p0
    pts[-1] = p1
    return pts


def _segment_points(p0, p1, density):
    """Sample the straight segment p0->p1 at the given density, exact endpoints."""
    p0 = np.asarray(p0, float)
    p1 = np.asarray(p1, float)
    length = float(np.hypot(*(p1 - p0)))
    n = max(1, int(math.ceil(length * density)))
    t = np.linspace(0.0, 1.0, n + 1)
    pts = p0[None, :] + t[:, None] * (p1 - p0)[None, :]
    pts[0] = p0
    pts[-1] = p1
    return pts


@dataclass
class LagoonGeometry:
    """Labeled polygonal boundary of the lagoon plus interface and area data.

    ``boundary_vertices`` is a single closed CCW loop (implicit last->first
    edge); ``segment_labels[i]`` labels the edge vertices[i] -> vertices[i+1].
    ``half_chains`` holds the x >= 0 portion of each labeled chain, in loop
    order, for symmetric meshing.  The interface is not part of the loop.
    """

    params: GeometryParams
    boundary_vertices: np.ndarray
    segment_labels: list
    interface: np.ndarray  # (2, 2) endpoints, left then right
    half_chains: list  # [(label, (k,2) vertices)], x >= 0, loop order
    seam: np.ndarray  # (3, 2): entrance mid, interface mid, top apex (x = 0)
    areas: dict = field(default_factory=dict)

    # centers used by the analytic point classifier
    main_center: tuple = (0.0, 0.0)
    seg_center: tuple = (0.0, 0.0)
    entrance_y: float = 0.0

    def subdomain_of(self, points) -> np.ndarray:
        """Region of each interior point: Main below channel mid-height, Seg above."""
        pts = np.atleast_2d(np.asarray(points, float))
        return np.where(pts[:, 1] < 0.0, REGION_MAIN, REGION_SEG)

    def contains(self, points) -> np.ndarray:
        """Analytic inside test (disk-cap-channel union); boundary points are fuzzy."""
        return self.signed_margin(points) > 0.0

    def signed_margin(self, points) -> np.ndarray:
        """Positive inside, negative outside; magnitude underestimates distance."""
        p = self.params
        pts = np.atleast_2d(np.asarray(points, float))
        x, y = pts[:, 0], pts[:, 1]
        hl = p.channel_length / 2.0
        d_m = np.hypot(x - self.main_center[0], y - self.main_center[1])
        d_s = np.hypot(x - self.seg_center[0], y - self.seg_center[1])
        main_m = np.minimum.reduce([p.r_main - d_m, -hl - y, y - self.entrance_y])
        chan_m = np.minimum(p.delta / 2.0 - np.abs(x), hl - np.abs(y))
        seg_m = np.minimum(p.r_seg - d_s, y - hl)
        return np.maximum.reduce([main_m, chan_m, seg_m])

    def interface_arc_coordinate(self, x) -> np.ndarray:
        """Arc-length position s in [0, delta] of interface points given their x."""
        return np.asarray(x, float) + self.params.delta / 2.0


def _shoelace(vertices) -> float:
    # exact-summation shoelace so chamber areas add up to the total to the ulp
    x = vertices[:, 0]
    y = vertices[:, 1]
    xn = np.roll(x, -1)
    yn = np.roll(y, -1)
    return 0.5 * math.fsum((x * yn - xn * y).tolist())


def build_lagoon(params: GeometryParams) -> LagoonGeometry:
    """Construct the labeled polygonal lagoon boundary of the two-disk domain."""
    p = params
    a_m = math.asin(p.delta / (2 * p.r_main))
    a_s = math.asin(p.delta / (2 * p.r_seg))
    beta = math.asin(p.entrance_width / (2 * p.r_main))
    hl = p.channel_length / 2.0

    # main arc must span a nonempty angle range between the two chords
    span = (math.pi / 2 - a_m) - (beta - math.pi / 2)
    if span <= 1e-3:
        raise GeometryError("entrance chord overlaps the channel opening")

    c_m = (0.0, -hl - p.r_main * math.cos(a_m))
    c_s = (0.0, +hl + p.r_seg * math.cos(a_s))
    y_e = c_m[1] - p.r_main * math.cos(beta)
    y_top = c_s[1] + p.r_seg
    dens = float(p.boundary_segments_per_unit)

    ent_r = (p.entrance_width / 2.0, y_e)
    chan_rb = (p.delta / 2.0, -hl)
    chan_rm = (p.delta / 2.0, 0.0)
    chan_rt = (p.delta / 2.0, +hl)
    apex = (0.0, y_top)

    # straight wall kept at its three corner vertices; the mesher subdivides
    # it, so channel lattice nodes never collide with boundary samples
    wall = np.array([chan_rb, chan_rm, chan_rt])
    half_chains = [
        (GAMMA_IN, _segment_points((0.0, y_e), ent_r, dens)),
        (GAMMA_ZERO, _arc_points(c_m, p.r_main, beta - math.pi / 2,
                                 math.pi / 2 - a_m, dens, ent_r, chan_rb)),
        (GAMMA_ZERO, wall),
        (GAMMA_ZERO, _arc_points(c_s, p.r_seg, a_s - math.pi / 2,
                                 math.pi / 2, dens, chan_rt, apex)),
    ]

    # full CCW loop: right-half chains then their mirrors (x -> -x) in reverse
    # order; every part drops its last vertex, which the next part re-adds
    parts = []
    labels = []
    mirrored_chains = []
    for lab, verts in reversed(half_chains):
        m = verts[::-1].copy()
        m[:, 0] = -m[:, 0]
        mirrored_chains.append((lab, m))
    for lab, verts in list(half_chains) + mirrored_chains:
        parts.append(verts[:-1])
        labels.extend([lab] * (len(verts) - 1))
    loop = np.vstack(parts)
    # rotate so the loop starts at the left end of the entrance chord,
    # making the GammaIn run contiguous without wraparound
    k0 = _loop_index_of(loop, (-p.entrance_width / 2.0, y_e))
    loop = np.roll(loop, -k0, axis=0)
    labels = labels[k0:] + labels[:k0]

    geom = LagoonGeometry(
        params=p,
        boundary_vertices=loop,
        segment_labels=labels,
        interface=np.array([[-p.delta / 2.0, 0.0], [p.delta / 2.0, 0.0]]),
        half_chains=half_chains,
        seam=np.array([[0.0, y_e], [0.0, 0.0], [0.0, y_top]]),
        main_center=c_m,
        seg_center=c_s,
        entrance_y=y_e,
    )

    k1 = _loop_index_of(loop, chan_rm)
    k2 = _loop_index_of(loop, (-p.delta / 2.0, 0.0))
    main_poly = np.vstack([loop[k2:], loop[: k1 + 1]])
    seg_poly = loop[k1 : k2 + 1]
    geom.areas = {
        "omega": _shoelace(loop),
        "main": _shoelace(main_poly),
        "seg": _shoelace(seg_poly),
    }
    return geom


def _loop_index_of(loop, point):
    hits = np.where((loop[:, 0] == point[0]) & (loop[:, 1] == point[1]))[0]
    if len(hits) != 1:
        raise GeometryError(f"boundary loop must contain {point} exactly once")
    return int(hits[0])


@dataclass(frozen=True)
class InterfaceProfile:
    """Normalized flux-shape function along the interface, parameterized by arc length."""

    kind: str
    delta: float

    def __post_init__(self):
        if self.kind not in ALL_PROFILES:
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if self.delta <= 0:
            raise ValueError("interface width must be positive")

    @property
    def is_analytic(self) -> bool:
        return self.kind in _ANALYTIC_PROFILES


def profile_weight(profile: InterfaceProfile, s) -> np.ndarray:
    """Weight per unit length at arc position s in [0, delta].

    Poiseuille: 6 s (delta - s) / delta^3 (no-slip, unit integral).
    Constant:   1 / delta.
    The exact profile kinds have no closed form here; they are resolved
    from a reference solve in the decomposition layer.
    """
    if not profile.is_analytic:
        raise ValueError(f"profile kind {profile.kind!r} has no analytic weight")
    s = np.asarray(s, float)
    d = profile.delta
    if np.any(s < -1e-12 * d) or np.any(s > d * (1 + 1e-12)):
        raise ValueError("arc position outside [0, delta]")
    s = np.clip(s, 0.0, d)
    if profile.kind == PROFILE_CONSTANT:
        return np.full_like(s, 1.0 / d)
    return 6.0 * s * (d - s) / d**3


def write_polygon_file(geom: LagoonGeometry, path) -> None:
    """Dump the labeled boundary as plain text: label, vertex count, x y pairs."""
    blocks = []
    start = 0
    labels = geom.segment_labels
    verts = geom.boundary_vertices
    n = len(verts)
    for i in range(1, n + 1):
        if i == n or labels[i] != labels[start]:
            idx = list(range(start, i)) + [(i) % n]
            blocks.append((labels[start], verts[idx]))
            start = i
            if i == n:
                break
    blocks.append((GAMMA_INTERFACE, geom.interface))
    with open(path, "w") as f:
        for lab, pts in blocks:
            f.write(f"{lab}\n{len(pts)}\n")
            for x, y in pts:
                f.write(f"{float(x)!r} {float(y)!r}\n")

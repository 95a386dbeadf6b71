"""Lagoon geometry: labeled boundary loop, areas, interface profiles."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from paralic import (
    GAMMA_IN,
    GAMMA_INTERFACE,
    GAMMA_ZERO,
    REGION_MAIN,
    REGION_SEG,
    GeometryError,
    GeometryParams,
    InterfaceProfile,
    analytic_areas,
    build_lagoon,
    equal_area_params,
    profile_weight,
)
from paralic.geometry import write_polygon_file


def test_param_validation():
    with pytest.raises(GeometryError):
        GeometryParams(delta=2.5)  # wider than both disks
    with pytest.raises(GeometryError):
        GeometryParams(delta=-0.1)
    with pytest.raises(GeometryError):
        GeometryParams(entrance_width=2.5)
    with pytest.raises(GeometryError):
        GeometryParams(r_main=0.0)
    with pytest.raises(GeometryError):
        GeometryParams(channel_length=0.0)
    with pytest.raises(GeometryError):
        GeometryParams(boundary_segments_per_unit=3)


def test_entrance_overlap_rejected():
    # both chords nearly the full diameter leave no main arc between them
    with pytest.raises(GeometryError):
        build_lagoon(
            GeometryParams(r_seg=1.0, delta=1.9999999, entrance_width=1.9999999)
        )


def test_loop_is_closed_simple_and_ccw(geom):
    loop = geom.boundary_vertices
    labels = geom.segment_labels
    assert len(labels) == len(loop)
    # no repeated vertices (the loop is implicit-closed, so all must be unique)
    assert len(np.unique(loop, axis=0)) == len(loop)
    # consecutive vertices distinct
    d = np.hypot(*(np.roll(loop, -1, axis=0) - loop).T)
    assert d.min() > 0
    # CCW orientation
    assert geom.areas["omega"] > 0


def test_loop_mirror_symmetric(geom):
    loop = geom.boundary_vertices
    mirrored = loop.copy()
    mirrored[:, 0] = -mirrored[:, 0]
    a = loop[np.lexsort(loop.T)]
    b = mirrored[np.lexsort(mirrored.T)]
    assert np.array_equal(a, b)


def test_entrance_chord_length(geom):
    loop = geom.boundary_vertices
    labels = np.asarray(geom.segment_labels)
    nxt = np.roll(np.arange(len(loop)), -1)
    ln = np.hypot(*(loop[nxt] - loop).T)
    total = math.fsum(ln[labels == GAMMA_IN].tolist())
    assert abs(total - geom.params.entrance_width) < 1e-12
    # the entrance is a horizontal chord at the entrance height
    sel = labels == GAMMA_IN
    assert np.all(loop[sel, 1] == geom.entrance_y)
    assert set(labels) == {GAMMA_IN, GAMMA_ZERO}


def test_interface_chord(geom):
    p0, p1 = geom.interface
    assert p0[1] == 0.0 and p1[1] == 0.0
    assert abs(np.hypot(*(p1 - p0)) - geom.params.delta) < 1e-15
    s = geom.interface_arc_coordinate([-0.1, 0.0, 0.1])
    assert np.allclose(s, [0.0, 0.1, 0.2], atol=1e-15)


def test_shoelace_area_matches_independent_oracle(geom):
    # cross-product shoelace without compensated summation
    loop = geom.boundary_vertices
    nxt = np.roll(loop, -1, axis=0)
    oracle = 0.5 * float(np.sum(loop[:, 0] * nxt[:, 1] - nxt[:, 0] * loop[:, 1]))
    assert abs(geom.areas["omega"] - oracle) < 1e-12


def test_polygon_area_approaches_analytic():
    # the polygon inscribes the arcs, so its area converges from below
    exact = analytic_areas(GeometryParams(delta=0.2))["omega"]
    coarse = build_lagoon(GeometryParams(delta=0.2, boundary_segments_per_unit=50))
    fine = build_lagoon(GeometryParams(delta=0.2, boundary_segments_per_unit=400))
    err_coarse = exact - coarse.areas["omega"]
    err_fine = exact - fine.areas["omega"]
    assert 0 < err_fine < err_coarse
    assert err_fine < 1e-4


def test_chamber_areas_add_up(geom):
    a = geom.areas
    assert abs(a["main"] + a["seg"] - a["omega"]) < 1e-12
    ana = analytic_areas(geom.params)
    assert abs(a["main"] - ana["main"]) < 1e-4
    assert abs(a["seg"] - ana["seg"]) < 1e-4


def test_equal_area_params():
    p = equal_area_params(GeometryParams(delta=0.2))
    a = analytic_areas(p)
    assert abs(a["main"] - a["seg"]) < 1e-10
    assert p.r_seg > 0.9  # the secondary disk must grow toward the main one


def test_subdomain_classifier(geom):
    pts = [(0.0, -1.0), (0.05, -0.01), (0.0, 1.0), (0.05, 0.01)]
    regions = geom.subdomain_of(pts)
    assert list(regions) == [REGION_MAIN, REGION_MAIN, REGION_SEG, REGION_SEG]


def test_contains(geom):
    inside = [(0.0, -1.0), (0.0, 0.0), (0.0, 0.8)]
    outside = [(2.0, 0.0), (0.5, 0.0), (0.0, geom.entrance_y - 0.1)]
    assert geom.contains(inside).all()
    assert not geom.contains(outside).any()


def test_profile_weight_values():
    prof = InterfaceProfile("poiseuille", 0.2)
    assert abs(profile_weight(prof, 0.1) - 7.5) < 1e-12  # peak 1.5/delta
    assert profile_weight(prof, 0.0) == 0.0
    assert profile_weight(prof, 0.2) == 0.0
    const = InterfaceProfile("constant", 0.2)
    assert np.allclose(profile_weight(const, [0.0, 0.07, 0.2]), 5.0)


def test_profile_weight_normalized():
    for kind in ("poiseuille", "constant"):
        prof = InterfaceProfile(kind, 0.2)
        val, _ = quad(lambda s: float(profile_weight(prof, s)), 0.0, 0.2)
        assert abs(val - 1.0) < 1e-12


def test_profile_weight_domain_errors():
    prof = InterfaceProfile("poiseuille", 0.2)
    with pytest.raises(ValueError):
        profile_weight(prof, -0.01)
    with pytest.raises(ValueError):
        profile_weight(prof, 0.21)
    with pytest.raises(ValueError):
        profile_weight(InterfaceProfile("exact-pointwise", 0.2), 0.1)


def test_interface_profile_validation():
    with pytest.raises(ValueError):
        InterfaceProfile("bogus", 0.2)
    with pytest.raises(ValueError):
        InterfaceProfile("constant", 0.0)
    assert InterfaceProfile("poiseuille", 0.2).is_analytic
    assert not InterfaceProfile("exact-variational", 0.2).is_analytic


def test_write_polygon_file(tmp_path, geom):
    path = tmp_path / "lagoon.txt"
    write_polygon_file(geom, path)
    lines = path.read_text().splitlines()
    labels = []
    i = 0
    total_pts = 0
    while i < len(lines):
        labels.append(lines[i])
        n = int(lines[i + 1])
        total_pts += n
        # coordinates round-trip through repr exactly
        x, y = lines[i + 2].split()
        assert float(x) == float(x)
        i += 2 + n
    assert GAMMA_INTERFACE in labels
    assert labels.count(GAMMA_IN) == 1
    assert total_pts > len(geom.boundary_vertices)

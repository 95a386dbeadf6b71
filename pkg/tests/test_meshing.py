"""Mesh generation: refinement postconditions, symmetry, submesh extraction."""

import math

import numpy as np
import pytest

from paralic import (
    GAMMA_IN,
    GAMMA_INTERFACE,
    REGION_MAIN,
    REGION_SEG,
    GeometryParams,
    TriMesh,
    build_lagoon,
    extract_submesh,
    quality_report,
    rectangle_mesh,
    triangulate,
)
from paralic.meshing import read_mesh, write_mesh


@pytest.fixture(scope="module")
def mesh(geom):
    return triangulate(geom, target_h=0.05)


def test_postconditions_default(geom, mesh):
    rep = quality_report(mesh)
    assert len(mesh.edges_of(GAMMA_INTERFACE)) >= 2
    assert rep["min_angle_deg"] >= 20.0
    assert rep["h_max"] <= 1.5 * 0.05
    assert abs(rep["area"] - geom.areas["omega"]) < 1e-10


def test_preconditions(geom):
    with pytest.raises(ValueError):
        triangulate(geom, 0.0)
    with pytest.raises(ValueError):
        # cannot resolve the channel: target_h must stay below delta / 2
        triangulate(geom, 0.5)
    with pytest.raises(ValueError):
        triangulate(geom, 0.05, channel_pitch=0.06)
    with pytest.raises(ValueError):
        triangulate(geom, 0.05, channel_pitch=0.0)


def test_deterministic(geom):
    a = triangulate(geom, 0.06)
    b = triangulate(geom, 0.06)
    assert np.array_equal(a.nodes, b.nodes)
    assert np.array_equal(a.tris, b.tris)
    assert np.array_equal(a.edges, b.edges)


def test_mirror_symmetry(mesh):
    mirrored = mesh.nodes.copy()
    mirrored[:, 0] = -mirrored[:, 0]
    a = mesh.nodes[np.lexsort(mesh.nodes.T)]
    b = mirrored[np.lexsort(mirrored.T)]
    assert np.array_equal(a, b)


def test_euler_characteristic(mesh):
    # topological disk: V - E + F = 1
    v = len(mesh.nodes)
    e = len(mesh.all_edges())
    f = len(mesh.tris)
    assert v - e + f == 1


def test_interface_edges_cover_the_chord(geom, mesh):
    edges = mesh.edges_of(GAMMA_INTERFACE)
    assert np.all(mesh.nodes[np.unique(edges), 1] == 0.0)
    total = math.fsum(mesh.edge_lengths(edges).tolist())
    assert abs(total - geom.params.delta) < 1e-10


def test_entrance_edges_cover_the_chord(geom, mesh):
    edges = mesh.edges_of(GAMMA_IN)
    assert np.all(mesh.nodes[np.unique(edges), 1] == geom.entrance_y)
    total = math.fsum(mesh.edge_lengths(edges).tolist())
    assert abs(total - geom.params.entrance_width) < 1e-10


def test_element_regions_partition(geom, mesh):
    mask_seg = mesh.element_region == REGION_SEG
    mask_main = mesh.element_region == REGION_MAIN
    assert (mask_seg | mask_main).all()
    cent = mesh.nodes[mesh.tris].mean(axis=1)
    assert np.all(cent[mask_main, 1] < 0)
    assert np.all(cent[mask_seg, 1] > 0)
    area_main = math.fsum(mesh.tri_areas()[mask_main].tolist())
    area_seg = math.fsum(mesh.tri_areas()[mask_seg].tolist())
    assert abs(area_main - geom.areas["main"]) < 1e-10
    assert abs(area_seg - geom.areas["seg"]) < 1e-10


def test_node_count_scaling():
    # quadratic growth shows once interior points dominate the fixed
    # boundary sampling, hence the light boundary density here
    g = build_lagoon(GeometryParams(delta=0.2, boundary_segments_per_unit=25))
    counts = [len(triangulate(g, h).nodes) for h in (0.08, 0.04, 0.02)]
    ratios = [counts[i + 1] / counts[i] for i in range(2)]
    assert all(3.0 <= r <= 4.5 for r in ratios)
    # at the default density the growth is still strictly monotone
    gd = build_lagoon(GeometryParams(delta=0.2))
    cd = [len(triangulate(gd, h).nodes) for h in (0.08, 0.04, 0.02)]
    assert cd[0] < cd[1] < cd[2]


def test_channel_strip_lattice(geom):
    pitch = 0.0125
    m = triangulate(geom, 0.05, channel_pitch=pitch)
    hw = geom.params.delta / 2.0
    n = int(round(hw / pitch))
    # interface nodes sit exactly on the lattice columns
    gam = np.unique(m.edges_of(GAMMA_INTERFACE))
    xs = np.sort(m.nodes[gam, 0])
    expect = np.sort(np.concatenate([-hw * np.arange(1, n + 1) / n,
                                     hw * np.arange(n + 1) / n]))
    assert len(xs) == 2 * n + 1
    assert np.allclose(xs, expect, atol=1e-15)
    assert len(m.edges_of(GAMMA_INTERFACE)) == 2 * n
    # the strip keeps the quality postconditions intact
    rep = quality_report(m)
    assert rep["min_angle_deg"] >= 20.0
    assert abs(rep["area"] - geom.areas["omega"]) < 1e-10
    # strip meshes stay mirror symmetric
    mir = m.nodes.copy()
    mir[:, 0] = -mir[:, 0]
    assert np.array_equal(m.nodes[np.lexsort(m.nodes.T)], mir[np.lexsort(mir.T)])


def test_extract_submesh_roundtrip(mesh):
    total = 0
    for region in (REGION_MAIN, REGION_SEG):
        sub, node_map, tri_map = extract_submesh(mesh, region)
        total += len(sub.tris)
        assert np.array_equal(sub.nodes, mesh.nodes[node_map])
        assert np.array_equal(node_map[sub.tris], mesh.tris[tri_map])
        assert (mesh.element_region[tri_map] == region).all()
        # former interface edges become boundary edges of the submesh
        gam = sub.edges_of(GAMMA_INTERFACE)
        assert len(gam) == len(mesh.edges_of(GAMMA_INTERFACE))
        assert np.all(sub.nodes[np.unique(gam), 1] == 0.0)
    assert total == len(mesh.tris)


def test_quality_report_equilateral():
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3.0) / 2.0]])
    m = TriMesh(
        nodes=nodes,
        tris=np.array([[0, 1, 2]]),
        edges=np.empty((0, 2), dtype=np.int64),
        edge_labels=np.empty(0, dtype=object),
        element_region=np.array([REGION_MAIN], dtype=object),
    )
    rep = quality_report(m)
    assert abs(rep["min_angle_deg"] - 60.0) < 1e-9
    assert abs(rep["max_angle_deg"] - 60.0) < 1e-9
    assert abs(rep["area"] - math.sqrt(3.0) / 4.0) < 1e-12


def test_rectangle_mesh():
    m = rectangle_mesh(4, 3)
    assert len(m.nodes) == 5 * 4
    assert len(m.tris) == 2 * 4 * 3
    assert abs(math.fsum(m.tri_areas().tolist()) - 1.0) < 1e-14
    assert len(m.edges_of("left")) == 3
    assert len(m.edges_of("bottom")) == 4
    v, e, f = len(m.nodes), len(m.all_edges()), len(m.tris)
    assert v - e + f == 1


def test_mesh_text_roundtrip(tmp_path, mesh):
    path = tmp_path / "mesh.txt"
    write_mesh(mesh, path)
    back = read_mesh(path)
    assert np.array_equal(back.nodes, mesh.nodes)
    assert np.array_equal(back.tris, mesh.tris)
    assert np.array_equal(back.edges, mesh.edges)
    assert np.array_equal(back.edge_labels, mesh.edge_labels)
    assert np.array_equal(back.element_region, mesh.element_region)

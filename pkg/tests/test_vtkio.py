"""Field writers produce parseable legacy VTK and CSV output."""

import numpy as np
import pytest

from paralic import rectangle_mesh, write_vtk
from paralic.vtkio import write_field_csv


def test_write_vtk_layout(tmp_path):
    m = rectangle_mesh(3, 2)
    path = tmp_path / "fields.vtk"
    g = np.arange(len(m.nodes), dtype=float)
    region = np.zeros(len(m.tris))
    u = np.ones((len(m.tris), 2))
    write_vtk(path, m, point_scalars={"g": g}, cell_scalars={"region": region},
              cell_vectors={"u": u}, title="unit")
    lines = path.read_text().splitlines()
    assert lines[0] == "# vtk DataFile Version 2.0"
    assert lines[1] == "unit"
    assert lines[2] == "ASCII"
    assert lines[3] == "DATASET UNSTRUCTURED_GRID"
    assert lines[4] == f"POINTS {len(m.nodes)} double"
    # points round-trip and all cells are triangles (VTK type 5)
    x, y, z = lines[5].split()
    assert (float(x), float(y), float(z)) == (0.0, 0.0, 0.0)
    icells = lines.index(f"CELLS {len(m.tris)} {4 * len(m.tris)}")
    first = lines[icells + 1].split()
    assert first[0] == "3" and len(first) == 4
    assert lines.count("5") >= len(m.tris)
    assert f"POINT_DATA {len(m.nodes)}" in lines
    assert "SCALARS g double 1" in lines
    assert f"CELL_DATA {len(m.tris)}" in lines
    assert "VECTORS u double" in lines
    # nodal values appear in node order
    ig = lines.index("SCALARS g double 1")
    vals = [float(v) for v in lines[ig + 2 : ig + 2 + len(m.nodes)]]
    assert vals == g.tolist()


def test_write_vtk_length_validation(tmp_path):
    m = rectangle_mesh(2, 2)
    with pytest.raises(ValueError):
        write_vtk(tmp_path / "bad.vtk", m, point_scalars={"g": np.ones(3)})
    with pytest.raises(ValueError):
        write_vtk(tmp_path / "bad2.vtk", m, cell_scalars={"r": np.ones(3)})
    with pytest.raises(ValueError):
        write_vtk(tmp_path / "bad3.vtk", m, cell_vectors={"u": np.ones((3, 2))})


def test_write_field_csv(tmp_path):
    m = rectangle_mesh(2, 2)
    g = np.linspace(0.0, 1.0, len(m.nodes))
    path = tmp_path / "field.csv"
    write_field_csv(path, m, g, name="conf")
    lines = path.read_text().splitlines()
    assert lines[0] == "node,x,y,conf"
    assert len(lines) == len(m.nodes) + 1
    i, x, y, v = lines[1].split(",")
    assert int(i) == 0
    assert float(v) == g[0]

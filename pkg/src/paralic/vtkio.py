"""Legacy VTK (ASCII) and CSV field writers for visualization."""

import numpy as np

from .meshing import TriMesh


def write_vtk(
    path,
    mesh: TriMesh,
    point_scalars: dict | None = None,
    cell_scalars: dict | None = None,
    cell_vectors: dict | None = None,
    title: str = "paralic fields",
) -> None:
    """Unstructured triangle grid with optional nodal and element data."""
    n = len(mesh.nodes)
    m = len(mesh.tris)
    with open(path, "w") as f:
        f.write("# vtk DataFile Version 2.0\n")
        f.write(f"{title}\n")
        f.write("ASCII\n")
        f.write("DATASET UNSTRUCTURED_GRID\n")
        f.write(f"POINTS {n} double\n")
        for x, y in mesh.nodes:
            f.write(f"{x:.16e} {y:.16e} 0.0\n")
        f.write(f"CELLS {m} {4 * m}\n")
        for a, b, c in mesh.tris:
            f.write(f"3 {a} {b} {c}\n")
        f.write(f"CELL_TYPES {m}\n")
        for _ in range(m):
            f.write("5\n")
        if point_scalars:
            f.write(f"POINT_DATA {n}\n")
            for name, vals in point_scalars.items():
                vals = np.asarray(vals, float)
                if len(vals) != n:
                    raise ValueError(f"point field {name!r} has wrong length")
                f.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                for v in vals:
                    f.write(f"{v:.16e}\n")
        if cell_scalars or cell_vectors:
            f.write(f"CELL_DATA {m}\n")
            for name, vals in (cell_scalars or {}).items():
                vals = np.asarray(vals, float)
                if len(vals) != m:
                    raise ValueError(f"cell field {name!r} has wrong length")
                f.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                for v in vals:
                    f.write(f"{v:.16e}\n")
            for name, vals in (cell_vectors or {}).items():
                vals = np.asarray(vals, float)
                if vals.shape != (m, 2):
                    raise ValueError(f"cell vector field {name!r} has wrong shape")
                f.write(f"VECTORS {name} double\n")
                for vx, vy in vals:
                    f.write(f"{vx:.16e} {vy:.16e} 0.0\n")


def write_field_csv(path, mesh: TriMesh, g, name: str = "g") -> None:
    """Node table: id, x, y, field value."""
    g = np.asarray(g, float)
    with open(path, "w") as f:
        f.write(f"node,x,y,{name}\n")
        for i, ((x, y), v) in enumerate(zip(mesh.nodes, g)):
            f.write(f"{i},{x:.16e},{y:.16e},{v:.16e}\n")

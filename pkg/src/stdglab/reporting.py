"""Writers and readers for meshes, finite element functions and result tables."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

__all__ = [
    "write_vtk_triangles",
    "fefunction_to_text",
    "fefunction_from_text",
    "spacetime_to_text",
    "spacetime_from_text",
    "write_csv",
    "csv_text",
    "write_json",
]


def write_vtk_triangles(path, vertices, cells, point_data=None, cell_data=None,
                        title="stdglab"):
    """Legacy ASCII VTK unstructured grid of triangles (cell type 5)."""
    vertices = np.asarray(vertices, dtype=float)
    cells = np.asarray(cells, dtype=np.int64)
    out = io.StringIO()
    out.write("# vtk DataFile Version 3.0\n")
    out.write(title.replace("\n", " ")[:255] + "\n")
    out.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
    out.write(f"POINTS {len(vertices)} double\n")
    for x, y in vertices.tolist():
        out.write(f"{x!r} {y!r} 0.0\n")
    out.write(f"CELLS {len(cells)} {4 * len(cells)}\n")
    for a, b, c in cells.tolist():
        out.write(f"3 {a} {b} {c}\n")
    out.write(f"CELL_TYPES {len(cells)}\n")
    out.write("5\n" * len(cells))
    for section, data, n in (("POINT_DATA", point_data, len(vertices)),
                             ("CELL_DATA", cell_data, len(cells))):
        if not data:
            continue
        out.write(f"{section} {n}\n")
        for name, values in data.items():
            values = np.asarray(values, dtype=float).ravel()
            if len(values) != n:
                raise ValueError(f"{section} field '{name}' has {len(values)} values, expected {n}")
            out.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            out.write("\n".join(repr(float(v)) for v in values) + "\n")
    Path(path).write_text(out.getvalue())


def _format_values(values) -> list[str]:
    values = np.asarray(values)
    if np.iscomplexobj(values):
        return [f"{v.real!r} {v.imag!r}" for v in values.tolist()]
    return [repr(float(v)) for v in values.tolist()]


def _parse_values(lines, is_complex):
    if is_complex:
        parts = [ln.split() for ln in lines]
        return np.array([complex(float(a), float(b)) for a, b in parts])
    return np.array([float(ln) for ln in lines])


def fefunction_to_text(fn) -> str:
    c = fn.coeffs
    kind = "complex" if np.iscomplexobj(c) else "real"
    head = [
        "stdglab-fefunction 1",
        f"order {fn.space.r}",
        f"field {kind}",
        f"coefficients {len(c)}",
    ]
    return "\n".join(head + _format_values(c)) + "\n" + fn.space.mesh.to_text()


def fefunction_from_text(text: str):
    from .fem import FeFunction, FeSpace
    from .mesh import Mesh

    lines = text.split("\n")
    if not lines[0].startswith("stdglab-fefunction"):
        raise ValueError("not an stdglab finite element function")
    r = int(lines[1].split()[1])
    is_complex = lines[2].split()[1] == "complex"
    n = int(lines[3].split()[1])
    coeffs = _parse_values(lines[4:4 + n], is_complex)
    mesh = Mesh.from_text("\n".join(lines[4 + n:]))
    return FeFunction(FeSpace(mesh, r), coeffs)


def spacetime_to_text(u) -> str:
    """Partition nodes, degree, then per-interval modal coefficient blocks."""
    c = u.coeffs
    kind = "complex" if np.iscomplexobj(c) else "real"
    out = [
        "stdglab-spacetime 1",
        f"order {u.space.r}",
        f"degree {u.q}",
        f"field {kind}",
        f"nodes {len(u.partition.nodes)}",
    ]
    out += [repr(float(t)) for t in u.partition.nodes]
    out.append(f"blocks {c.shape[0]} {c.shape[1]} {c.shape[2]}")
    for m in range(c.shape[0]):
        for j in range(c.shape[1]):
            out.append(f"interval {m + 1} mode {j}")
            out += _format_values(c[m, j])
    return "\n".join(out) + "\n" + u.space.mesh.to_text()


def spacetime_from_text(text: str):
    from .fem import FeSpace
    from .mesh import Mesh
    from .spacetime import SpaceTimeFunction, TimePartition

    lines = text.split("\n")
    if not lines[0].startswith("stdglab-spacetime"):
        raise ValueError("not an stdglab space-time function")
    r = int(lines[1].split()[1])
    q = int(lines[2].split()[1])
    is_complex = lines[3].split()[1] == "complex"
    nn = int(lines[4].split()[1])
    nodes = np.array([float(t) for t in lines[5:5 + nn]])
    pos = 5 + nn
    nm, nj, nd = map(int, lines[pos].split()[1:])
    pos += 1
    coeffs = np.zeros((nm, nj, nd), dtype=complex if is_complex else float)
    for m in range(nm):
        for j in range(nj):
            pos += 1
            coeffs[m, j] = _parse_values(lines[pos:pos + nd], is_complex)
            pos += nd
    mesh = Mesh.from_text("\n".join(lines[pos:]))
    return SpaceTimeFunction(TimePartition(nodes), FeSpace(mesh, r), q, coeffs)


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return repr(v) if math.isfinite(v) else str(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def csv_text(rows, columns=None) -> str:
    rows = list(rows)
    if columns is None:
        columns = list(rows[0]) if rows else []
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row.get(c, "")) for c in columns])
    return buf.getvalue()


def write_csv(path, rows, columns=None) -> None:
    Path(path).write_text(csv_text(rows, columns))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_json(path, data) -> None:
    Path(path).write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")

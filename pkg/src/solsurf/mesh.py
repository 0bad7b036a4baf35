"""Mesh export for grid immersions: OBJ, binary PLY, CSV.

Vertices are emitted in row-major node order; each grid quad is split into
two triangles with consistent winding.  Singular nodes are dropped and the
ring of quads around each dropped node is re-triangulated as a fan, so one
interior singular node costs one vertex and turns its four quads (eight
triangles) into a six-triangle fan.
"""

from __future__ import annotations

import os
import struct
import tempfile

import numpy as np

from .geometry import Immersion3


def triangulate(grid_shape: tuple[int, int], keep: np.ndarray | None = None
                ) -> tuple[np.ndarray, np.ndarray]:
    """Vertex index map and triangle list for a grid with dropped nodes.

    Returns (vertex_ids, triangles): vertex_ids[i, j] is the output vertex
    number or -1 for dropped nodes; triangles is (m, 3) into that numbering.
    """
    nu, nv = grid_shape
    if keep is None:
        keep = np.ones(grid_shape, dtype=bool)
    ids = np.full(grid_shape, -1, dtype=np.int64)
    ids[keep] = np.arange(int(keep.sum()))
    tris: list[tuple[int, int, int]] = []
    holes: set[tuple[int, int]] = set(map(tuple, np.argwhere(~keep)))

    def corner_ids(i, j):
        return (ids[i, j], ids[i + 1, j], ids[i + 1, j + 1], ids[i, j + 1])

    skipped_quads: set[tuple[int, int]] = set()
    for (i, j) in sorted(holes):
        # fan over the octagon of neighbours around an interior dropped node
        if not (0 < i < nu - 1 and 0 < j < nv - 1):
            continue
        ring = [(i - 1, j - 1), (i, j - 1), (i + 1, j - 1), (i + 1, j),
                (i + 1, j + 1), (i, j + 1), (i - 1, j + 1), (i - 1, j)]
        if any(not keep[p] for p in ring):
            continue   # adjacent holes: just leave the gap
        for di, dj in ((-1, -1), (0, -1), (-1, 0), (0, 0)):
            skipped_quads.add((i + di, j + dj))
        r = [ids[p] for p in ring]
        for k in range(1, 7):
            tris.append((r[0], r[k], r[k + 1]))

    for i in range(nu - 1):
        for j in range(nv - 1):
            if (i, j) in skipped_quads:
                continue
            a, b, c, d = corner_ids(i, j)
            if min(a, b, c, d) < 0:
                continue
            tris.append((a, b, c))
            tris.append((a, c, d))
    return ids, np.asarray(tris, dtype=np.int64).reshape(-1, 3)


def _atomic_write(path: str, writer, binary: bool = False):
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb" if binary else "w") as fh:
            writer(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def export_mesh(surface: Immersion3, path: str, fmt: str = "obj",
                keep: np.ndarray | None = None) -> dict:
    """Write the immersion as a mesh file; returns vertex/triangle counts.

    ``keep`` masks the vertices to emit (drop singular nodes); by default
    every finite node is kept.
    """
    pts = surface.points
    finite = np.isfinite(pts).all(axis=-1)
    keep = finite if keep is None else (keep & finite)
    ids, tris = triangulate(surface.grid.shape, keep)
    verts = pts[keep]

    if fmt == "obj":
        def write(fh):
            for v in verts:
                fh.write("v %.17g %.17g %.17g\n" % (v[0], v[1], v[2]))
            for t in tris:
                fh.write("f %d %d %d\n" % (t[0] + 1, t[1] + 1, t[2] + 1))
        _atomic_write(path, write)
    elif fmt == "ply":
        def write(fh):
            header = (
                "ply\nformat binary_little_endian 1.0\n"
                f"element vertex {len(verts)}\n"
                "property double x\nproperty double y\nproperty double z\n"
                f"element face {len(tris)}\n"
                "property list uchar int vertex_indices\nend_header\n"
            )
            fh.write(header.encode("ascii"))
            fh.write(verts.astype("<f8").tobytes())
            for t in tris:
                fh.write(struct.pack("<Biii", 3, int(t[0]), int(t[1]), int(t[2])))
        _atomic_write(path, write, binary=True)
    elif fmt == "csv":
        U, V = surface.grid.meshgrid()
        def write(fh):
            fh.write("u,v,x1,x2,x3\n")
            nu, nv = surface.grid.shape
            for i in range(nu):
                for j in range(nv):
                    if not keep[i, j]:
                        continue
                    fh.write("%.17g,%.17g,%.17g,%.17g,%.17g\n" % (
                        U[i, j], V[i, j], pts[i, j, 0], pts[i, j, 1], pts[i, j, 2]))
        _atomic_write(path, write)
    else:
        raise ValueError(f"unknown mesh format {fmt!r}")
    return {"vertices": int(len(verts)), "triangles": int(len(tris)), "format": fmt}


def euler_count(n_vertices: int, triangles: np.ndarray) -> int:
    """V - E + F of a triangle mesh (edges counted once)."""
    edges = set()
    for t in triangles:
        for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            edges.add((min(a, b), max(a, b)))
    return int(n_vertices - len(edges) + len(triangles))

"""Structured tetrahedral mesh of the unit cube.

Each lattice sub-cube is split into the six tetrahedra that share its main
diagonal (the Kuhn/Freudenthal pattern), so refinements nest and every cell
has the same volume 1/(6 n^3). Entities are numbered deterministically:
vertices lexicographically on the lattice, edges and faces as sorted vertex
tuples in lexicographic order. Every edge is globally oriented from its
lower to its higher vertex index; each cell stores, for its six local edges,
the global edge index and the sign relating local to global direction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations

import numpy as np


class InvalidSubdivision(ValueError):
    """Subdivision count below 1."""


#: Local edges of a tetrahedron as ordered local vertex pairs.
LOCAL_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))

#: Local faces (vertex triples) of a tetrahedron.
LOCAL_FACES = ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2))


@dataclass(frozen=True)
class TetMesh:
    """Immutable tetrahedral partition of [0,1]^3 with oriented entities."""

    n: int
    vertices: np.ndarray          # (V, 3) float
    cells: np.ndarray             # (C, 4) int, positively oriented
    edges: np.ndarray             # (E, 2) int, each row (a, b) with a < b
    cell_edges: np.ndarray        # (C, 6) int, global edge index per local edge
    cell_edge_signs: np.ndarray   # (C, 6) int, +1 local matches global, else -1
    faces: np.ndarray             # (F, 3) int, sorted triples (diagnostics)
    face_cell_count: np.ndarray   # (F,) int, incident cells per face
    boundary_vertex: np.ndarray   # (V,) bool
    boundary_edge: np.ndarray     # (E,) bool
    h: float                      # max cell diameter = sqrt(3)/n
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_cells(self) -> int:
        return self.cells.shape[0]

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def num_faces(self) -> int:
        return self.faces.shape[0]

    def cell_geometry(self) -> tuple[np.ndarray, np.ndarray]:
        """Barycentric gradients (C,4,3) and signed volumes (C,) of all cells."""
        if "geometry" not in self._cache:
            self._cache["geometry"] = _barycentric_gradients(self.vertices, self.cells)
        return self._cache["geometry"]


def _barycentric_gradients(vertices: np.ndarray, cells: np.ndarray):
    verts = vertices[cells]                      # (C, 4, 3)
    mats = np.ones((cells.shape[0], 4, 4))
    mats[:, :, 1:] = verts
    vols = np.linalg.det(mats) / 6.0
    coeffs = np.linalg.inv(mats)                 # lam_m(x) = coeffs[0,m] + coeffs[1:,m].x
    grads = np.transpose(coeffs[:, 1:4, :], (0, 2, 1)).copy()   # (C, 4, 3)
    return grads, vols


def build_unit_cube_mesh(n: int) -> TetMesh:
    """Partition [0,1]^3 into 6*n^3 tetrahedra on the uniform lattice.

    The six tetrahedra of each sub-cube are generated by the axis
    permutations of the monotone lattice path from the cube's low corner to
    its high corner, so all cells share the main-diagonal direction. Cell
    vertex tuples are reordered where needed to make every signed volume
    positive.
    """
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise InvalidSubdivision(f"subdivisions per edge must be an integer >= 1, got {n!r}")
    n = int(n)

    side = n + 1
    ii, jj, kk = np.meshgrid(np.arange(side), np.arange(side), np.arange(side), indexing="ij")
    lattice = np.stack([ii.ravel(), jj.ravel(), kk.ravel()], axis=1)
    vertices = lattice.astype(float) / n
    boundary_vertex = np.any((lattice == 0) | (lattice == n), axis=1)

    def vid(i, j, k):
        return (i * side + j) * side + k

    # Monotone-path tetrahedra of the unit cube, fixed local order per axis
    # permutation; odd permutations get their last two vertices swapped so
    # the signed volume is positive.
    corner_tets = []
    for perm in sorted(permutations(range(3))):
        steps = np.zeros((4, 3), dtype=int)
        for m, axis in enumerate(perm, start=1):
            steps[m] = steps[m - 1]
            steps[m, axis] = 1
        parity = _permutation_parity(perm)
        order = [0, 1, 2, 3] if parity > 0 else [0, 1, 3, 2]
        corner_tets.append(steps[order])
    corner_tets = np.asarray(corner_tets)        # (6, 4, 3)

    base = np.stack(np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij"), axis=-1)
    base = base.reshape(-1, 3)                   # (n^3, 3) sub-cube low corners
    # cells[c*6 + t] = tet t of sub-cube c
    corners = base[:, None, None, :] + corner_tets[None, :, :, :]   # (n^3, 6, 4, 3)
    cells = vid(corners[..., 0], corners[..., 1], corners[..., 2]).reshape(-1, 4)

    edges, cell_edges, cell_edge_signs = _number_edges(cells)
    faces, face_cell_count = _number_faces(cells)

    edge_boundary = _boundary_edges(lattice, edges, n)

    mesh = TetMesh(
        n=n,
        vertices=vertices,
        cells=cells,
        edges=edges,
        cell_edges=cell_edges,
        cell_edge_signs=cell_edge_signs,
        faces=faces,
        face_cell_count=face_cell_count,
        boundary_vertex=boundary_vertex,
        boundary_edge=edge_boundary,
        h=np.sqrt(3.0) / n,
    )
    _, vols = mesh.cell_geometry()
    assert np.all(vols > 0.0), "cell orientation must be positive"
    return mesh


def _permutation_parity(perm) -> int:
    inversions = sum(
        1 for a in range(len(perm)) for b in range(a + 1, len(perm)) if perm[a] > perm[b]
    )
    return -1 if inversions % 2 else 1


def _number_edges(cells: np.ndarray):
    local = np.asarray(LOCAL_EDGES)
    pairs = cells[:, local]                      # (C, 6, 2) ordered local pairs
    lo = pairs.min(axis=2)
    hi = pairs.max(axis=2)
    signs = np.where(pairs[:, :, 0] == lo, 1, -1).astype(np.int64)
    keyed = np.stack([lo.ravel(), hi.ravel()], axis=1)
    edges, inverse = np.unique(keyed, axis=0, return_inverse=True)
    cell_edges = inverse.reshape(cells.shape[0], 6)
    return edges.astype(np.int64), cell_edges.astype(np.int64), signs


def _number_faces(cells: np.ndarray):
    local = np.asarray(LOCAL_FACES)
    triples = np.sort(cells[:, local], axis=2).reshape(-1, 3)
    faces, counts = np.unique(triples, axis=0, return_counts=True)
    return faces.astype(np.int64), counts.astype(np.int64)


def _boundary_edges(lattice: np.ndarray, edges: np.ndarray, n: int) -> np.ndarray:
    a, b = lattice[edges[:, 0]], lattice[edges[:, 1]]
    on_common_wall = ((a == 0) & (b == 0)) | ((a == n) & (b == n))
    return np.any(on_common_wall, axis=1)


@dataclass(frozen=True)
class MeshStats:
    n: int
    V: int
    E: int
    F: int
    C: int
    h: float
    boundary_vertices: int
    boundary_edges: int
    boundary_faces: int
    min_cell_volume: float
    max_cell_volume: float
    total_volume: float


def mesh_stats(mesh: TetMesh) -> MeshStats:
    """Entity counts, mesh size, boundary counts, and cell-volume range."""
    _, vols = mesh.cell_geometry()
    return MeshStats(
        n=mesh.n,
        V=mesh.num_vertices,
        E=mesh.num_edges,
        F=mesh.num_faces,
        C=mesh.num_cells,
        h=mesh.h,
        boundary_vertices=int(mesh.boundary_vertex.sum()),
        boundary_edges=int(mesh.boundary_edge.sum()),
        boundary_faces=int((mesh.face_cell_count == 1).sum()),
        min_cell_volume=float(vols.min()),
        max_cell_volume=float(vols.max()),
        total_volume=float(vols.sum()),
    )


def euler_characteristic(mesh: TetMesh) -> int:
    return mesh.num_vertices - mesh.num_edges + mesh.num_faces - mesh.num_cells

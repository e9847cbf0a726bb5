"""Reference elements on a single tetrahedron.

P1 hat functions and lowest-order Nedelec (first kind) edge functions, both
expressed directly in physical coordinates through the barycentric
coefficients of the cell. The Nedelec function of local edge (a, b) is
lam_a grad(lam_b) - lam_b grad(lam_a); its tangential moment along that edge
is 1 and it vanishes along every other edge, so the 6x6 edge-moment matrix
is the identity. Curls are constant per cell: 2 grad(lam_a) x grad(lam_b).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from epe.mesh import LOCAL_EDGES


class DegenerateCell(ValueError):
    """Cell with nonpositive signed volume."""


@dataclass(frozen=True)
class P1Basis:
    """Four scalar hat functions with constant gradients."""

    vertices: np.ndarray  # (4, 3)
    coeffs: np.ndarray    # (4, 4): lam_m(x) = coeffs[0, m] + coeffs[1:, m] . x
    grads: np.ndarray     # (4, 3)
    volume: float

    def values(self, points: np.ndarray) -> np.ndarray:
        """Hat-function values, shape (npoints, 4)."""
        points = np.atleast_2d(points)
        return self.coeffs[0] + points @ self.coeffs[1:]


@dataclass(frozen=True)
class NedelecBasis:
    """Six edge functions of the lowest-order curl-conforming element."""

    p1: P1Basis
    curls: np.ndarray     # (6, 3), constant per function

    @property
    def volume(self) -> float:
        return self.p1.volume

    def values(self, points: np.ndarray) -> np.ndarray:
        """Edge-function values, shape (npoints, 6, 3)."""
        lam = self.p1.values(points)             # (m, 4)
        g = self.p1.grads                        # (4, 3)
        out = np.empty((lam.shape[0], 6, 3))
        for i, (a, b) in enumerate(LOCAL_EDGES):
            out[:, i, :] = lam[:, a, None] * g[b] - lam[:, b, None] * g[a]
        return out

    def edge_moments(self) -> np.ndarray:
        """Tangential moments int_e_j phi_i . tau_j ds, shape (6 edges, 6 functions).

        Computed with 2-point Gauss quadrature along each edge, exact for
        the linear tangential traces; the unit tangent runs from the lower
        to the higher local vertex of LOCAL_EDGES.
        """
        verts = self.p1.vertices
        gauss = (np.array([-1.0, 1.0]) / np.sqrt(3.0) + 1.0) / 2.0
        moments = np.empty((6, 6))
        for j, (a, b) in enumerate(LOCAL_EDGES):
            pa, pb = verts[a], verts[b]
            chord = pb - pa                      # |chord| ds-factor cancels the unit tangent
            pts = pa[None, :] + gauss[:, None] * chord[None, :]
            vals = self.values(pts)              # (2, 6, 3)
            moments[j] = 0.5 * (vals @ chord).sum(axis=0)
        return moments


def p1_basis(cell_vertices: np.ndarray) -> P1Basis:
    """P1 basis of the tetrahedron with the given (4, 3) vertex coordinates."""
    cell_vertices = np.asarray(cell_vertices, dtype=float)
    mat = np.ones((4, 4))
    mat[:, 1:] = cell_vertices
    det = np.linalg.det(mat)
    volume = det / 6.0
    if volume <= 0.0 or not np.isfinite(volume):
        raise DegenerateCell(f"signed cell volume must be positive, got {volume!r}")
    coeffs = np.linalg.inv(mat)
    return P1Basis(
        vertices=cell_vertices, coeffs=coeffs, grads=coeffs[1:4].T.copy(), volume=volume
    )


def nedelec_basis(cell_vertices: np.ndarray) -> NedelecBasis:
    """Lowest-order Nedelec basis of the given tetrahedron."""
    p1 = p1_basis(cell_vertices)
    g = p1.grads
    curls = np.empty((6, 3))
    for i, (a, b) in enumerate(LOCAL_EDGES):
        curls[i] = 2.0 * np.cross(g[a], g[b])
    return NedelecBasis(p1=p1, curls=curls)

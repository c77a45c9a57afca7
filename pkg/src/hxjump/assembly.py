"""Sparse operators for lowest-order edge elements and the nodal auxiliary spaces.

All element integrals are exact: Whitney curls are constant per tet and the
mass integrals reduce to barycentric moments vol*(1 + delta_ij)/20.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from .mesh import _LOCAL_EDGES, Mesh, SubdomainPartition
from .topology import CoefficientField

_EA = np.array([a for a, _ in _LOCAL_EDGES])
_EB = np.array([b for _, b in _LOCAL_EDGES])


@dataclass(frozen=True, eq=False)
class DofMap:
    """Free/constrained bookkeeping for the three discrete spaces."""
    free_edges: np.ndarray     # indices of interior edges
    free_nodes: np.ndarray     # indices of interior vertices
    n_edges: int
    n_nodes: int

    @classmethod
    def from_mesh(cls, mesh: Mesh) -> DofMap:
        return cls(
            free_edges=np.flatnonzero(~mesh.edge_on_boundary),
            free_nodes=np.flatnonzero(~mesh.vertex_on_boundary),
            n_edges=mesh.n_edges,
            n_nodes=mesh.n_vertices,
        )

    @property
    def free_vector(self) -> np.ndarray:
        """Free indices of the vector nodal space, component-major (c*nv + i)."""
        return np.concatenate([c * self.n_nodes + self.free_nodes for c in range(3)])

    @property
    def n_free_edges(self) -> int:
        return len(self.free_edges)

    def edge_selector(self, bc: bool) -> np.ndarray:
        return self.free_edges if bc else np.arange(self.n_edges)

    def node_selector(self, bc: bool) -> np.ndarray:
        return self.free_nodes if bc else np.arange(self.n_nodes)

    def vector_selector(self, bc: bool) -> np.ndarray:
        return self.free_vector if bc else np.arange(3 * self.n_nodes)

    def extend_edges(self, x: np.ndarray) -> np.ndarray:
        """Reduced edge vector -> full vector with zero boundary values."""
        out = np.zeros(self.n_edges)
        out[self.free_edges] = x
        return out


def barycentric_gradients(mesh: Mesh) -> np.ndarray:
    """(nt, 4, 3) gradients of the barycentric coordinates on every tet."""
    x = mesh.vertices[mesh.tets]
    jac = x[:, 1:, :] - x[:, :1, :]
    if np.any(np.abs(np.linalg.det(jac)) < 1e-14 * mesh.h ** 3):
        raise ValueError("degenerate tetrahedron")
    inv = np.linalg.inv(jac)                     # columns are grad lambda_1..3
    g = np.empty((len(mesh.tets), 4, 3))
    g[:, 1:, :] = np.transpose(inv, (0, 2, 1))
    g[:, 0, :] = -g[:, 1:, :].sum(axis=1)
    return g


def _p1_moments() -> np.ndarray:
    return (np.ones((4, 4)) + np.eye(4)) / 20.0


def whitney_element_matrices(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    """Unit-coefficient curl-curl and mass matrices per tet, in local edge order and orientation."""
    g = barycentric_gradients(mesh)
    vol = mesh.volumes
    gg = np.einsum("tid,tjd->tij", g, g)
    curls = 2.0 * np.cross(g[:, _EA, :], g[:, _EB, :])
    kel = vol[:, None, None] * np.einsum("tid,tjd->tij", curls, curls)
    m = _p1_moments()
    a, b = _EA, _EB
    mel = (
        m[a[:, None], a[None, :]] * gg[:, b[:, None], b[None, :]]
        - m[a[:, None], b[None, :]] * gg[:, b[:, None], a[None, :]]
        - m[b[:, None], a[None, :]] * gg[:, a[:, None], b[None, :]]
        + m[b[:, None], b[None, :]] * gg[:, a[:, None], a[None, :]]
    )
    mel = vol[:, None, None] * mel
    return kel, mel


def p1_element_matrices(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    """Unit-coefficient P1 stiffness and mass matrices per tet."""
    g = barycentric_gradients(mesh)
    vol = mesh.volumes[:, None, None]
    kel = vol * np.einsum("tid,tjd->tij", g, g)
    mel = vol * _p1_moments()[None, :, :]
    return kel, mel


def _scatter(local: np.ndarray, dofs: np.ndarray, size: int) -> sp.csr_matrix:
    nl = dofs.shape[1]
    rows = np.repeat(dofs, nl, axis=1).ravel()
    cols = np.tile(dofs, (1, nl)).ravel()
    mat = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(size, size)).tocsr()
    mat.sum_duplicates()
    mat.eliminate_zeros()
    return mat


def _tet_weights(part: SubdomainPartition, values) -> np.ndarray:
    return np.asarray(values, dtype=float)[part.tet_domain]


def _restrict(mat: sp.spmatrix, rows: np.ndarray, cols: np.ndarray | None = None) -> sp.csr_matrix:
    cols = rows if cols is None else cols
    return sp.csr_matrix(mat[rows][:, cols])


def edge_matrix(mesh: Mesh, curl_weight, mass_weight) -> sp.csr_matrix:
    """sum over tets of curl_weight*K_el + mass_weight*M_el on the full edge space."""
    kel, mel = whitney_element_matrices(mesh)
    s = mesh.tet_edge_signs.astype(float)
    local = (np.asarray(curl_weight, float)[:, None, None] * kel
             + np.asarray(mass_weight, float)[:, None, None] * mel)
    local = local * s[:, :, None] * s[:, None, :]
    return _scatter(local, mesh.tet_edges, mesh.n_edges)


def edge_curl_matrix(mesh, part, coeffs: CoefficientField) -> sp.csr_matrix:
    return edge_matrix(mesh, _tet_weights(part, coeffs.alpha), np.zeros(mesh.n_tets))


def edge_mass_matrix(mesh, part, weights) -> sp.csr_matrix:
    """Edge mass matrix weighted per subdomain (weights indexed by subdomain)."""
    return edge_matrix(mesh, np.zeros(mesh.n_tets), _tet_weights(part, weights))


def assemble_edge_system(mesh, part, coeffs: CoefficientField, bc: bool = True) -> sp.csr_matrix:
    """A = K_curl(alpha) + M(beta), reduced to interior edges when bc is set."""
    a = edge_matrix(mesh, _tet_weights(part, coeffs.alpha), _tet_weights(part, coeffs.beta))
    if bc:
        a = _restrict(a, DofMap.from_mesh(mesh).free_edges)
    return a


def scalar_matrix(mesh, stiff_weight, mass_weight) -> sp.csr_matrix:
    kel, mel = p1_element_matrices(mesh)
    local = (np.asarray(stiff_weight, float)[:, None, None] * kel
             + np.asarray(mass_weight, float)[:, None, None] * mel)
    return _scatter(local, mesh.tets, mesh.n_vertices)


def assemble_scalar_nodal(mesh, part, coeffs: CoefficientField, bc: bool = True) -> sp.csr_matrix:
    """(alpha grad, grad) + (beta ., .) on the scalar P1 space."""
    s = scalar_matrix(mesh, _tet_weights(part, coeffs.alpha), _tet_weights(part, coeffs.beta))
    return _restrict(s, DofMap.from_mesh(mesh).free_nodes) if bc else s


def assemble_vector_nodal(mesh, part, coeffs: CoefficientField, bc: bool = True) -> sp.csr_matrix:
    """Block diagonal vector operator, three copies of the scalar form."""
    s = scalar_matrix(mesh, _tet_weights(part, coeffs.alpha), _tet_weights(part, coeffs.beta))
    big = sp.block_diag([s, s, s], format="csr")
    return _restrict(big, DofMap.from_mesh(mesh).free_vector) if bc else big


def assemble_scalar_beta(mesh, part, coeffs: CoefficientField, bc: bool = True) -> sp.csr_matrix:
    """(beta grad p, grad q)."""
    s = scalar_matrix(mesh, _tet_weights(part, coeffs.beta), np.zeros(mesh.n_tets))
    return _restrict(s, DofMap.from_mesh(mesh).free_nodes) if bc else s


def assemble_h1_beta(mesh, part, coeffs: CoefficientField, bc: bool = True) -> sp.csr_matrix:
    """(beta grad p, grad q) + (beta p, q), the weighted H1 norm on scalars."""
    w = _tet_weights(part, coeffs.beta)
    s = scalar_matrix(mesh, w, w)
    return _restrict(s, DofMap.from_mesh(mesh).free_nodes) if bc else s


def discrete_gradient(mesh: Mesh, bc: bool = True) -> sp.csr_matrix:
    ne = mesh.n_edges
    rows = np.repeat(np.arange(ne), 2)
    cols = mesh.edges.ravel()
    vals = np.tile([-1.0, 1.0], ne)
    g = sp.csr_matrix((vals, (rows, cols)), shape=(ne, mesh.n_vertices))
    if bc:
        dm = DofMap.from_mesh(mesh)
        g = _restrict(g, dm.free_edges, dm.free_nodes)
    return g


def nodal_to_edge_interpolation(mesh: Mesh, bc: bool = True) -> sp.csr_matrix:
    """Edge moments of a componentwise-linear vector field given by nodal values."""
    ne, nv = mesh.n_edges, mesh.n_vertices
    t = mesh.vertices[mesh.edges[:, 1]] - mesh.vertices[mesh.edges[:, 0]]
    rows = np.repeat(np.arange(ne), 6)
    cols = np.empty((ne, 6), dtype=np.int64)
    vals = np.empty((ne, 6))
    for c in range(3):
        cols[:, 2 * c] = c * nv + mesh.edges[:, 0]
        cols[:, 2 * c + 1] = c * nv + mesh.edges[:, 1]
        vals[:, 2 * c] = 0.5 * t[:, c]
        vals[:, 2 * c + 1] = 0.5 * t[:, c]
    p = sp.csr_matrix((vals.ravel(), (rows, cols.ravel())), shape=(ne, 3 * nv))
    p.eliminate_zeros()
    if bc:
        dm = DofMap.from_mesh(mesh)
        p = _restrict(p, dm.free_edges, dm.free_vector)
    return p


def interpolate_field(mesh: Mesh, field) -> np.ndarray:
    """Edge moments of a smooth field by 3-point Gauss on every edge (full edge space)."""
    a = mesh.vertices[mesh.edges[:, 0]]
    b = mesh.vertices[mesh.edges[:, 1]]
    nodes, weights = np.polynomial.legendre.leggauss(3)
    out = np.zeros(mesh.n_edges)
    for s, w in zip(nodes, weights):
        x = a + 0.5 * (s + 1.0) * (b - a)
        out += 0.5 * w * np.einsum("ed,ed->e", field(x), b - a)
    return out


def export_matrix_market(path: str | Path, mat: sp.spmatrix, comment: str = "") -> None:
    scipy.io.mmwrite(str(path), sp.coo_matrix(mat), comment=comment, symmetry="general")


@dataclass(frozen=True, eq=False)
class MaxwellSystem:
    """Everything the preconditioner and probes need, on reduced index sets."""
    mesh: Mesh
    part: SubdomainPartition
    coeffs: CoefficientField
    dofs: DofMap
    A: sp.csr_matrix
    vector_laplacian: sp.csr_matrix
    G: sp.csr_matrix
    Pi: sp.csr_matrix

    @property
    def n(self) -> int:
        return self.A.shape[0]


def assemble_system(mesh, part, coeffs: CoefficientField) -> MaxwellSystem:
    return MaxwellSystem(
        mesh=mesh,
        part=part,
        coeffs=coeffs,
        dofs=DofMap.from_mesh(mesh),
        A=assemble_edge_system(mesh, part, coeffs, bc=True),
        vector_laplacian=assemble_vector_nodal(mesh, part, coeffs, bc=True),
        G=discrete_gradient(mesh, bc=True),
        Pi=nodal_to_edge_interpolation(mesh, bc=True),
    )

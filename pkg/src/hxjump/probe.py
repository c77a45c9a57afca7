"""Optimal-energy decompositions v = G p + Pi w + R and strange-vertex functionals.

The probe replaces constructive decompositions by the minimum of

    ||p||^2_{H1_beta} + ||w||^2_{H1_*} + h^-2 ||R||^2_{L2_alpha},

so the reported ratios are lower bounds for any constructive constant.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from . import linalg
from .assembly import MaxwellSystem, assemble_h1_beta, edge_mass_matrix, _restrict
from .mesh import BOUNDARY


@dataclass(frozen=True, eq=False)
class ProbeOperators:
    system: MaxwellSystem
    P: sp.csr_matrix          # [G Pi]
    K: sp.csr_matrix          # blockdiag(H1_beta, vector Laplacian)
    W: sp.csr_matrix          # h^-2 alpha-weighted edge mass
    n_scalar: int

    @classmethod
    def build(cls, system: MaxwellSystem) -> ProbeOperators:
        mesh, part, coeffs = system.mesh, system.part, system.coeffs
        n1 = assemble_h1_beta(mesh, part, coeffs, bc=True)
        k = sp.block_diag([n1, system.vector_laplacian], format="csr")
        w = edge_mass_matrix(mesh, part, coeffs.alpha)
        w = _restrict(w, system.dofs.free_edges) / mesh.h ** 2
        p = sp.hstack([system.G, system.Pi], format="csr")
        return cls(system, p, k, sp.csr_matrix(w), n1.shape[0])

    def normal_matrix(self) -> sp.csr_matrix:
        return sp.csr_matrix(self.K + self.P.T @ self.W @ self.P)

    def schur_dense(self) -> np.ndarray:
        """Dense S with v'Sv equal to the minimal objective for v."""
        wd = self.W.toarray()
        wp = (self.W @ self.P).toarray()
        fac = linalg.cholesky_factor(self.normal_matrix())
        s = wd - wp @ linalg.solve(fac, wp.T)
        return 0.5 * (s + s.T)


@dataclass(frozen=True, eq=False)
class DecompositionResult:
    p: np.ndarray
    w: np.ndarray
    R: np.ndarray
    objective: float
    energy: float
    parts: dict

    @property
    def ratio(self) -> float:
        """sqrt(objective / energy); nan when v carries no energy."""
        if self.energy <= 0:
            return float("nan")
        return float(np.sqrt(self.objective / self.energy))


def empirical_decomposition(v: np.ndarray, system: MaxwellSystem, ops: ProbeOperators | None = None) -> DecompositionResult:
    ops = ProbeOperators.build(system) if ops is None else ops
    v = np.asarray(v, dtype=float)
    ns = ops.n_scalar
    if not np.any(v):
        z = np.zeros(ops.P.shape[1])
        return DecompositionResult(z[:ns], z[ns:], np.zeros_like(v), 0.0, 0.0,
                                   {"scalar": 0.0, "vector": 0.0, "remainder": 0.0})
    try:
        fac = linalg.cholesky_factor(ops.normal_matrix())
    except linalg.NotSPDError as exc:
        raise linalg.NotSPDError(exc.index, "decomposition normal system is singular") from exc
    y = linalg.solve(fac, ops.P.T @ (ops.W @ v))
    p, w = y[:ns], y[ns:]
    r = v - ops.P @ y
    ps = float(p @ (ops.K[:ns, :ns] @ p))
    ws = float(w @ (ops.K[ns:, ns:] @ w))
    rs = float(r @ (ops.W @ r))
    energy = float(v @ (system.A @ v))
    return DecompositionResult(p, w, r, ps + ws + rs, energy, {"scalar": ps, "vector": ws, "remainder": rs})


def decomposition_objective(system: MaxwellSystem, ops: ProbeOperators, p, w, v) -> float:
    """Objective of an arbitrary (possibly hand-built) decomposition."""
    y = np.concatenate([p, w])
    r = v - ops.P @ y
    return float(y @ (ops.K @ y) + r @ (ops.W @ r))


@dataclass(frozen=True, eq=False)
class WorstCase:
    ratio: float
    witness: np.ndarray       # A-normalized


def worst_case_ratio(system: MaxwellSystem, constraints=None, ops: ProbeOperators | None = None) -> WorstCase:
    """Largest sqrt(objective/energy), optionally over the null space of the constraint rows."""
    n = system.n
    if n > linalg.DENSE_LIMIT:
        raise ValueError(f"dimension {n} exceeds the dense limit {linalg.DENSE_LIMIT}")
    ops = ProbeOperators.build(system) if ops is None else ops
    s = ops.schur_dense()
    a = system.A.toarray()
    if constraints is not None:
        f = np.atleast_2d(np.asarray(constraints, float))
        q = la.null_space(f)
        ev, vec = la.eigh(q.T @ s @ q, q.T @ a @ q)
        x = q @ vec[:, -1]
    else:
        ev, vec = la.eigh(s, a)
        x = vec[:, -1]
    x = x / np.sqrt(x @ a @ x)
    # fixed sign so repeated runs agree bit for bit
    j = int(np.argmax(np.abs(x)))
    if x[j] < 0:
        x = -x
    return WorstCase(float(np.sqrt(max(ev[-1], 0.0))), x)


# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ConstraintFunctional:
    vertex: int
    coefficients: np.ndarray            # over free edges
    paths: tuple[tuple[tuple[int, int], ...], ...]   # (edge id, sign) per step, one path per subdomain
    starts: tuple[int, int]
    faces: tuple[int, int]              # coarse face index in each subdomain boundary

    def __call__(self, v: np.ndarray) -> float:
        return float(self.coefficients @ v)


def _rim_path(mesh, rim_edges: np.ndarray, start: int, goal: int) -> tuple[tuple[int, int], ...]:
    adj: dict[int, list[tuple[int, int]]] = {}
    for e in sorted(int(x) for x in rim_edges):
        a, b = (int(x) for x in mesh.edges[e])
        adj.setdefault(a, []).append((b, e))
        adj.setdefault(b, []).append((a, e))
    prev: dict[int, tuple[int, int]] = {start: (-1, -1)}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        if u == goal:
            break
        for nxt, e in sorted(adj.get(u, [])):
            if nxt not in prev:
                prev[nxt] = (u, e)
                queue.append(nxt)
    if goal not in prev:
        raise ValueError("no rim path from the boundary to the strange vertex")
    steps = []
    node = goal
    while node != start:
        u, e = prev[node]
        steps.append((e, 1 if mesh.edges[e, 0] == u else -1))
        node = u
    return tuple(reversed(steps))


def strange_vertex_functional(system: MaxwellSystem, strange) -> ConstraintFunctional:
    """Difference of tangential path integrals along coarse-face rims of the two special subdomains."""
    mesh, part = system.mesh, system.part
    v = int(strange.vertex)
    if strange.on_boundary or len(strange.special) != 2:
        raise ValueError("only interior strange vertices with two special subdomains are supported")
    full = np.zeros(mesh.n_edges)
    paths, starts, faces = [], [], []
    for sign, k in zip((1.0, -1.0), strange.special):
        cfs = part.boundaries[k].coarse_faces
        order = sorted(range(len(cfs)), key=lambda i: (cfs[i].axis, cfs[i].level, cfs[i].normal, cfs[i].label))
        picked = None
        for i in order:
            cf = cfs[i]
            if v not in set(cf.vertices.tolist()):
                continue
            rim_v = np.unique(mesh.edges[cf.rim_edges])
            on_b = rim_v[mesh.vertex_on_boundary[rim_v]]
            if len(on_b):
                picked = (i, int(on_b.min()))
                break
        if picked is None:
            raise ValueError(f"subdomain {part.names[k]} has no face through the vertex reaching the boundary")
        i, start = picked
        path = _rim_path(mesh, cfs[i].rim_edges, start, v)
        for e, s in path:
            full[e] += sign * s
        paths.append(path)
        starts.append(start)
        faces.append(i)
    coeffs = full[system.dofs.free_edges]
    return ConstraintFunctional(v, coeffs, tuple(paths), tuple(starts), tuple(faces))


def interface_label(label: int, names) -> str:
    return "boundary" if label == BOUNDARY else names[label]

"""Structured Kuhn meshes of the unit cube and box-partition topology.

The mesh is the standard 6-tetrahedra-per-cell Kuhn subdivision.  Every
entity list is numbered deterministically: vertices lexicographically by
lattice coordinates, edges/faces by their sorted vertex tuples.  Edges are
oriented tail -> head with tail < head.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

BOUNDARY = -1

_LOCAL_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
_LOCAL_FACES = ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2))


class GeometryError(ValueError):
    """Raised for geometry configurations the mesh cannot resolve."""


@dataclass(frozen=True, eq=False)
class Mesh:
    n: int
    lattice: np.ndarray          # (nv, 3) integer lattice coordinates
    vertices: np.ndarray         # (nv, 3) coordinates in [0, 1]^3
    tets: np.ndarray             # (nt, 4), positively oriented
    edges: np.ndarray            # (ne, 2), tail < head
    faces: np.ndarray            # (nf, 3), sorted
    tet_edges: np.ndarray        # (nt, 6) global edge ids, local order _LOCAL_EDGES
    tet_edge_signs: np.ndarray   # (nt, 6) +1 where local and global orientation agree
    tet_faces: np.ndarray        # (nt, 4) global face ids, face i opposite vertex i
    face_tets: np.ndarray        # (nf, 2) adjacent tets, -1 if none
    face_edges: np.ndarray       # (nf, 3)
    volumes: np.ndarray          # (nt,)
    vertex_on_boundary: np.ndarray
    edge_on_boundary: np.ndarray
    face_on_boundary: np.ndarray

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def n_tets(self) -> int:
        return len(self.tets)

    def vertex_index(self, point) -> int:
        """Index of the mesh vertex at ``point`` (must lie on the lattice)."""
        ijk = np.rint(np.asarray(point, dtype=float) * self.n).astype(int)
        if np.any(np.abs(ijk / self.n - np.asarray(point, dtype=float)) > 1e-9):
            raise GeometryError(f"point {point} is not a mesh vertex")
        m = self.n + 1
        return int(ijk[0] * m * m + ijk[1] * m + ijk[2])

    def vertex_faces(self) -> sp.csr_matrix:
        """Vertex x face incidence (boolean CSR)."""
        return _incidence(self.faces, self.n_vertices)

    def vertex_edges(self) -> sp.csr_matrix:
        return _incidence(self.edges, self.n_vertices)

    def edge_faces(self) -> sp.csr_matrix:
        return _incidence(self.face_edges, self.n_edges)


def _incidence(cells: np.ndarray, n_rows: int) -> sp.csr_matrix:
    k = cells.shape[1]
    rows = cells.ravel()
    cols = np.repeat(np.arange(len(cells)), k)
    data = np.ones(len(rows), dtype=bool)
    return sp.csr_matrix((data, (rows, cols)), shape=(n_rows, len(cells)))


def _signed_volumes(x: np.ndarray, tets: np.ndarray) -> np.ndarray:
    p = x[tets]
    d = p[:, 1:, :] - p[:, :1, :]
    return np.linalg.det(d) / 6.0


def build_structured_cube(n: int) -> Mesh:
    """Kuhn subdivision of [0,1]^3 with ``n`` cells per axis."""
    if int(n) != n or n < 1:
        raise ValueError(f"resolution must be a positive integer, got {n!r}")
    n = int(n)
    m = n + 1
    ijk = np.array(list(itertools.product(range(m), repeat=3)), dtype=np.int64)
    vid = lambda i, j, k: (i * m + j) * m + k  # noqa: E731
    x = ijk / n

    cells = np.array(list(itertools.product(range(n), repeat=3)), dtype=np.int64)
    tets = []
    for perm in itertools.permutations(range(3)):
        path = [np.zeros(3, dtype=np.int64)]
        for axis in perm:
            step = path[-1].copy()
            step[axis] += 1
            path.append(step)
        corners = [cells + off for off in path]
        tets.append(np.stack([vid(*c.T) for c in corners], axis=1))
    tets = np.concatenate(tets, axis=0)
    vol = _signed_volumes(x, tets)
    neg = vol < 0
    tets[neg] = tets[neg][:, [0, 1, 3, 2]]
    order = np.lexsort(np.sort(tets, axis=1).T[::-1])
    tets = tets[order]

    nv = len(x)
    loc_e = np.array(_LOCAL_EDGES)
    ea = tets[:, loc_e[:, 0]]
    eb = tets[:, loc_e[:, 1]]
    lo, hi = np.minimum(ea, eb), np.maximum(ea, eb)
    ekeys = (lo * nv + hi).ravel()
    ukeys, einv = np.unique(ekeys, return_inverse=True)
    edges = np.stack([ukeys // nv, ukeys % nv], axis=1)
    tet_edges = einv.reshape(len(tets), 6)
    tet_edge_signs = np.where(ea < eb, 1, -1).astype(np.int8)

    loc_f = np.array(_LOCAL_FACES)
    fverts = np.sort(tets[:, loc_f], axis=2)          # (nt, 4, 3)
    fkeys = ((fverts[..., 0] * nv + fverts[..., 1]) * nv + fverts[..., 2]).ravel()
    ufk, finv = np.unique(fkeys, return_inverse=True)
    faces = np.stack([ufk // (nv * nv), (ufk // nv) % nv, ufk % nv], axis=1)
    tet_faces = finv.reshape(len(tets), 4)

    face_tets = -np.ones((len(faces), 2), dtype=np.int64)
    tet_of_slot = np.repeat(np.arange(len(tets)), 4)
    order = np.argsort(finv, kind="stable")
    sorted_f = finv[order]
    first = np.r_[True, sorted_f[1:] != sorted_f[:-1]]
    face_tets[sorted_f[first], 0] = tet_of_slot[order[first]]
    face_tets[sorted_f[~first], 1] = tet_of_slot[order[~first]]

    ekey_lookup = {int(k): i for i, k in enumerate(ukeys)}
    face_edges = np.array(
        [[ekey_lookup[int(a * nv + b)], ekey_lookup[int(a * nv + c)], ekey_lookup[int(b * nv + c)]]
         for a, b, c in faces],
        dtype=np.int64,
    )

    face_on_boundary = face_tets[:, 1] < 0
    vertex_on_boundary = np.any((ijk == 0) | (ijk == n), axis=1)
    edge_on_boundary = np.zeros(len(edges), dtype=bool)
    edge_on_boundary[face_edges[face_on_boundary].ravel()] = True

    return Mesh(
        n=n,
        lattice=ijk,
        vertices=x,
        tets=tets,
        edges=edges,
        faces=faces,
        tet_edges=tet_edges,
        tet_edge_signs=tet_edge_signs,
        tet_faces=tet_faces,
        face_tets=face_tets,
        face_edges=face_edges,
        volumes=_signed_volumes(x, tets),
        vertex_on_boundary=vertex_on_boundary,
        edge_on_boundary=edge_on_boundary,
        face_on_boundary=face_on_boundary,
    )


# --------------------------------------------------------------------------
# geometry configuration

@dataclass(frozen=True)
class Region:
    name: str
    boxes: tuple[tuple[float, float, float, float, float, float], ...]
    alpha: float | None = None
    beta: float | None = None


@dataclass(frozen=True)
class GeometryConfig:
    regions: tuple[Region, ...]
    n: int | None = None
    label: str = "custom"

    @classmethod
    def from_dict(cls, data: dict) -> GeometryConfig:
        if "regions" not in data or not data["regions"]:
            raise GeometryError("geometry needs a non-empty 'regions' list")
        regions = []
        for i, reg in enumerate(data["regions"]):
            boxes = tuple(tuple(float(c) for c in b) for b in reg.get("boxes", []))
            if not boxes or any(len(b) != 6 for b in boxes):
                raise GeometryError(f"region {i}: boxes must be [x0,y0,z0,x1,y1,z1] lists")
            regions.append(Region(
                name=str(reg.get("name", f"region{i}")),
                boxes=boxes,
                alpha=None if reg.get("alpha") is None else float(reg["alpha"]),
                beta=None if reg.get("beta") is None else float(reg["beta"]),
            ))
        n = data.get("n")
        return cls(regions=tuple(regions), n=None if n is None else int(n),
                   label=str(data.get("label", "custom")))

    @classmethod
    def from_json(cls, path: str | Path) -> GeometryConfig:
        return cls.from_dict(json.loads(Path(path).read_text()))


# --------------------------------------------------------------------------
# partition and its coarse boundary description

@dataclass(frozen=True, eq=False)
class CoarseFace:
    """A planar piece of a subdomain boundary facing one neighbour (or the outside)."""
    label: int                   # neighbouring subdomain, or BOUNDARY
    axis: int
    level: int                   # lattice coordinate of the plane
    normal: int                  # outward orientation along ``axis``
    faces: np.ndarray            # fine face ids
    edges: np.ndarray            # fine edge ids of the closed face
    vertices: np.ndarray
    rim_edges: np.ndarray        # fine edges on the relative boundary of the face


@dataclass(frozen=True, eq=False)
class CoarseEdge:
    """Maximal straight chain of fine edges where coarse faces of a subdomain meet."""
    coarse_faces: tuple[int, ...]
    direction: int
    edges: np.ndarray
    vertices: np.ndarray
    endpoints: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class SubdomainBoundary:
    coarse_faces: tuple[CoarseFace, ...]
    coarse_edges: tuple[CoarseEdge, ...]
    coarse_vertices: np.ndarray  # fine vertex ids


@dataclass(frozen=True, eq=False)
class SubdomainPartition:
    mesh: Mesh
    names: tuple[str, ...]
    tet_domain: np.ndarray               # (nt,)
    vertex_mask: np.ndarray              # (N0, nv) closure membership
    edge_mask: np.ndarray                # (N0, ne)
    face_mask: np.ndarray                # (N0, nf)
    boundaries: tuple[SubdomainBoundary, ...]
    label: str = "custom"

    @property
    def n_domains(self) -> int:
        return len(self.names)

    def tets_of(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.tet_domain == k)


def _on_lattice(c: float, n: int) -> bool:
    return abs(round(c * n) - c * n) < 1e-9


def assign_subdomains(mesh: Mesh, geometry: GeometryConfig) -> SubdomainPartition:
    """Tag every tet with the region whose boxes contain its centroid."""
    n = mesh.n
    for reg in geometry.regions:
        for box in reg.boxes:
            lo, hi = np.array(box[:3]), np.array(box[3:])
            if np.any(lo < -1e-12) or np.any(hi > 1 + 1e-12) or np.any(hi <= lo):
                raise GeometryError(f"region {reg.name!r}: invalid box {box}")
            if not all(_on_lattice(c, n) for c in box):
                raise GeometryError(
                    f"region {reg.name!r}: box {box} is not aligned with the n={n} mesh"
                )
    centroids = mesh.vertices[mesh.tets].mean(axis=1)
    hits = np.zeros((len(geometry.regions), mesh.n_tets), dtype=bool)
    for r, reg in enumerate(geometry.regions):
        for box in reg.boxes:
            lo, hi = np.array(box[:3]), np.array(box[3:])
            hits[r] |= np.all((centroids > lo) & (centroids < hi), axis=1)
    count = hits.sum(axis=0)
    if np.any(count == 0):
        t = int(np.flatnonzero(count == 0)[0])
        raise GeometryError(f"tet {t} (centroid {centroids[t]}) is not covered by any region")
    if np.any(count > 1):
        t = int(np.flatnonzero(count > 1)[0])
        raise GeometryError(f"tet {t} (centroid {centroids[t]}) is covered by several regions")
    tet_domain = np.argmax(hits, axis=0)

    n0 = len(geometry.regions)
    vmask = np.zeros((n0, mesh.n_vertices), dtype=bool)
    emask = np.zeros((n0, mesh.n_edges), dtype=bool)
    fmask = np.zeros((n0, mesh.n_faces), dtype=bool)
    for k in range(n0):
        tk = tet_domain == k
        if not np.any(tk):
            raise GeometryError(f"region {geometry.regions[k].name!r} contains no tets")
        vmask[k, mesh.tets[tk].ravel()] = True
        emask[k, mesh.tet_edges[tk].ravel()] = True
        fmask[k, mesh.tet_faces[tk].ravel()] = True
        _check_connected(mesh, tk, geometry.regions[k].name)

    boundaries = tuple(_subdomain_boundary(mesh, tet_domain, k) for k in range(n0))
    return SubdomainPartition(
        mesh=mesh,
        names=tuple(r.name for r in geometry.regions),
        tet_domain=tet_domain,
        vertex_mask=vmask,
        edge_mask=emask,
        face_mask=fmask,
        boundaries=boundaries,
        label=geometry.label,
    )


def _check_connected(mesh: Mesh, tet_sel: np.ndarray, name: str) -> None:
    # closure connectivity: tets sharing at least a vertex
    tets = mesh.tets[tet_sel]
    inc = _incidence(tets, mesh.n_vertices).astype(np.int8)
    adj = inc.T @ inc
    ncomp, _ = connected_components(adj, directed=False)
    if ncomp != 1:
        raise GeometryError(f"region {name!r} is not connected ({ncomp} pieces)")


def _components(n_items: int, pairs: np.ndarray) -> np.ndarray:
    if n_items == 0:
        return np.zeros(0, dtype=np.int64)
    if len(pairs) == 0:
        return np.arange(n_items)
    g = sp.coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n_items, n_items))
    _, lab = connected_components(g, directed=False)
    return lab


def _face_plane(mesh: Mesh, f: int) -> tuple[int, int]:
    lat = mesh.lattice[mesh.faces[f]]
    for axis in range(3):
        if lat[0, axis] == lat[1, axis] == lat[2, axis]:
            return axis, int(lat[0, axis])
    return -1, -1


def _subdomain_boundary(mesh: Mesh, tet_domain: np.ndarray, k: int) -> SubdomainBoundary:
    ft = mesh.face_tets
    dom0 = tet_domain[ft[:, 0]]
    dom1 = np.where(ft[:, 1] >= 0, tet_domain[np.maximum(ft[:, 1], 0)], BOUNDARY)
    on_k = (dom0 == k) | (dom1 == k)
    bfaces = np.flatnonzero(on_k & (dom0 != dom1))

    keys = []
    for f in bfaces:
        inside, other = (ft[f, 0], dom1[f]) if dom0[f] == k else (ft[f, 1], dom0[f])
        axis, level = _face_plane(mesh, f)
        if axis < 0:
            raise GeometryError("subdomain interface is not resolved by mesh planes")
        opposite = np.setdiff1d(mesh.tets[inside], mesh.faces[f])[0]
        normal = 1 if mesh.lattice[opposite, axis] < level else -1
        keys.append((int(other), axis, level, normal))

    # split each (label, plane, side) group into edge-connected pieces
    coarse_faces: list[CoarseFace] = []
    groups: dict[tuple, list[int]] = {}
    for f, key in zip(bfaces, keys):
        groups.setdefault(key, []).append(int(f))
    for key in sorted(groups):
        fl = np.array(groups[key])
        fe = mesh.face_edges[fl]
        pairs = []
        by_edge: dict[int, list[int]] = {}
        for i, row in enumerate(fe):
            for e in row:
                by_edge.setdefault(int(e), []).append(i)
        for members in by_edge.values():
            for a, b in zip(members[:-1], members[1:]):
                pairs.append((a, b))
        lab = _components(len(fl), np.array(pairs, dtype=np.int64).reshape(-1, 2))
        for c in np.unique(lab):
            sel = fl[lab == c]
            edges_all = mesh.face_edges[sel].ravel()
            ue, cnt = np.unique(edges_all, return_counts=True)
            coarse_faces.append(CoarseFace(
                label=key[0], axis=key[1], level=key[2], normal=key[3],
                faces=np.sort(sel),
                edges=ue,
                vertices=np.unique(mesh.faces[sel]),
                rim_edges=ue[cnt == 1],
            ))

    # fine edges lying on rims of at least two coarse faces form coarse edges
    edge_owner: dict[int, set[int]] = {}
    for ci, cf in enumerate(coarse_faces):
        for e in cf.rim_edges:
            edge_owner.setdefault(int(e), set()).add(ci)
    ridge = {e: tuple(sorted(s)) for e, s in edge_owner.items() if len(s) >= 2}
    coarse_edges: list[CoarseEdge] = []
    egroups: dict[tuple, list[int]] = {}
    for e, owners in ridge.items():
        a, b = mesh.edges[e]
        d = mesh.lattice[b] - mesh.lattice[a]
        direction = int(np.flatnonzero(d)[0]) if np.count_nonzero(d) == 1 else -1
        egroups.setdefault((owners, direction), []).append(e)
    for key in sorted(egroups):
        el = np.array(sorted(egroups[key]))
        ev = mesh.edges[el]
        verts, inv = np.unique(ev, return_inverse=True)
        inv = inv.reshape(-1, 2)
        lab = _components(len(verts), inv)
        for c in np.unique(lab):
            vsel = lab == c
            esel = vsel[inv[:, 0]]
            chain = el[esel]
            cv = verts[vsel]
            deg = np.bincount(np.searchsorted(cv, mesh.edges[chain].ravel()), minlength=len(cv))
            coarse_edges.append(CoarseEdge(
                coarse_faces=key[0], direction=key[1], edges=chain, vertices=cv,
                endpoints=tuple(int(v) for v in cv[deg == 1]),
            ))

    corner = set()
    for ce in coarse_edges:
        corner.update(ce.endpoints)
    vertex_count: dict[int, int] = {}
    for cf in coarse_faces:
        for v in cf.vertices:
            vertex_count[int(v)] = vertex_count.get(int(v), 0) + 1
    # vertices where three or more coarse faces meet are corners as well
    corner.update(v for v, c in vertex_count.items() if c >= 3)
    return SubdomainBoundary(
        coarse_faces=tuple(coarse_faces),
        coarse_edges=tuple(coarse_edges),
        coarse_vertices=np.array(sorted(corner), dtype=np.int64),
    )


# --------------------------------------------------------------------------
# coarse topology between subdomains

INTERSECTION_CLASSES = ("empty", "vertex", "edge", "face")


@dataclass(frozen=True, eq=False)
class Intersection:
    kind: str
    faces: np.ndarray
    edges: np.ndarray
    vertices: np.ndarray


@dataclass(frozen=True, eq=False)
class SubdomainGraph:
    partition: SubdomainPartition
    pairs: dict                     # (k, l) with k < l -> Intersection
    boundary_faces: tuple[np.ndarray, ...]
    boundary_edges: tuple[np.ndarray, ...]
    boundary_vertices: tuple[np.ndarray, ...]
    skeleton_vertices: np.ndarray = field(default=None)

    @property
    def mesh(self) -> Mesh:
        return self.partition.mesh

    @property
    def n_domains(self) -> int:
        return self.partition.n_domains

    def intersection(self, k: int, l: int) -> Intersection:
        if k == l:
            raise ValueError("intersection of a subdomain with itself")
        return self.pairs[(min(k, l), max(k, l))]

    def kind(self, k: int, l: int) -> str:
        return self.intersection(k, l).kind

    def intersects(self, k: int, l: int) -> bool:
        return k != l and self.kind(k, l) != "empty"

    def boundary_kind(self, k: int) -> str:
        if len(self.boundary_faces[k]):
            return "face"
        if len(self.boundary_edges[k]):
            return "edge"
        if len(self.boundary_vertices[k]):
            return "vertex"
        return "empty"


def coarse_topology(mesh: Mesh, part: SubdomainPartition) -> SubdomainGraph:
    """Classify every subdomain pair by the highest-dimensional shared entity."""
    if part.mesh is not mesh:
        raise ValueError("partition was built on a different mesh")
    n0 = part.n_domains
    pairs = {}
    for k in range(n0):
        for l in range(k + 1, n0):
            f = np.flatnonzero(part.face_mask[k] & part.face_mask[l])
            e = np.flatnonzero(part.edge_mask[k] & part.edge_mask[l])
            v = np.flatnonzero(part.vertex_mask[k] & part.vertex_mask[l])
            kind = "face" if len(f) else "edge" if len(e) else "vertex" if len(v) else "empty"
            pairs[(k, l)] = Intersection(kind=kind, faces=f, edges=e, vertices=v)
    bf = tuple(np.flatnonzero(part.face_mask[k] & mesh.face_on_boundary) for k in range(n0))
    be = tuple(np.flatnonzero(part.edge_mask[k] & mesh.edge_on_boundary) for k in range(n0))
    bv = tuple(np.flatnonzero(part.vertex_mask[k] & mesh.vertex_on_boundary) for k in range(n0))
    skel = set()
    for b in part.boundaries:
        skel.update(int(v) for v in b.coarse_vertices)
    for inter in pairs.values():
        if inter.kind == "vertex":
            skel.update(int(v) for v in inter.vertices)
    return SubdomainGraph(
        partition=part, pairs=pairs,
        boundary_faces=bf, boundary_edges=be, boundary_vertices=bv,
        skeleton_vertices=np.array(sorted(skel), dtype=np.int64),
    )

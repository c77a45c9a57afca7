"""Coefficient-distribution calculus on box partitions.

Everything here works on fine mesh entities: a set such as Gamma_k is the
collection of fine faces, edges and vertices of the closed intersections.
Isolated edges/vertices are fine entities not covered by a higher
dimensional member of the same set, which is exact for mesh-resolved
partitions.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .mesh import BOUNDARY, SubdomainGraph


@dataclass(frozen=True)
class CoefficientField:
    alpha: tuple[float, ...]
    beta: tuple[float, ...]
    tau: float = 10.0

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=float)
        b = np.asarray(self.beta, dtype=float)
        if a.shape != b.shape or a.ndim != 1:
            raise ValueError("alpha and beta must be 1-d with equal length")
        if np.any(a <= 0) or np.any(b <= 0) or not np.all(np.isfinite(a)) or not np.all(np.isfinite(b)):
            raise ValueError("coefficients must be finite and strictly positive")
        if self.tau < 1:
            raise ValueError("comparability threshold tau must be >= 1")
        object.__setattr__(self, "alpha", tuple(float(x) for x in a))
        object.__setattr__(self, "beta", tuple(float(x) for x in b))

    @property
    def n_domains(self) -> int:
        return len(self.alpha)

    def relation(self, k: int) -> str:
        """'beta<alpha', 'alpha<beta' or 'equiv' under the threshold tau."""
        a, b = self.alpha[k], self.beta[k]
        small_b = b <= self.tau * a
        small_a = a <= self.tau * b
        if small_a and small_b:
            return "equiv"
        return "beta<alpha" if small_b else "alpha<beta"

    def scaled(self, alpha_factor: float = 1.0, beta_factor: float = 1.0) -> CoefficientField:
        return CoefficientField(
            tuple(alpha_factor * a for a in self.alpha),
            tuple(beta_factor * b for b in self.beta),
            self.tau,
        )


# --------------------------------------------------------------------------
# Gamma sets

@dataclass(frozen=True, eq=False)
class GammaSet:
    k: int
    coarse_faces: tuple[int, ...]          # indices into the subdomain's coarse faces
    isolated_edges: tuple[np.ndarray, ...]  # straight chains of fine edges
    isolated_vertices: tuple[int, ...]     # fine vertex ids
    fine_faces: np.ndarray
    fine_edges: np.ndarray
    fine_vertices: np.ndarray
    n_components: int
    lipschitz_components: tuple[bool, ...]

    @property
    def connected(self) -> bool:
        return self.n_components <= 1

    @property
    def empty(self) -> bool:
        return len(self.fine_vertices) == 0

    @property
    def faces_only(self) -> bool:
        return not self.isolated_edges and not self.isolated_vertices

    @property
    def lipschitz(self) -> bool:
        return all(self.lipschitz_components)


def _check_index(graph: SubdomainGraph, coeffs: CoefficientField, k: int) -> None:
    if coeffs.n_domains != graph.n_domains:
        raise ValueError(
            f"{coeffs.n_domains} coefficient pairs for {graph.n_domains} subdomains"
        )
    if not 0 <= k < graph.n_domains:
        raise IndexError(f"subdomain index {k} out of range")


def _union_find_components(nodes: np.ndarray, links: np.ndarray) -> np.ndarray:
    """Component label per node (nodes sorted, links given as node values)."""
    parent = list(range(len(nodes)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    if len(links):
        idx = np.searchsorted(nodes, links)
        for a, b in idx:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    return np.array([find(i) for i in range(len(nodes))], dtype=np.int64)


def gamma_set(graph: SubdomainGraph, coeffs: CoefficientField, k: int) -> GammaSet:
    """Gamma_k: closed contacts with non-smaller-alpha neighbours and with the outside."""
    _check_index(graph, coeffs, k)
    mesh, part = graph.mesh, graph.partition
    alpha = coeffs.alpha
    faces = [graph.boundary_faces[k]]
    edges = [graph.boundary_edges[k]]
    verts = [graph.boundary_vertices[k]]
    for l in range(graph.n_domains):
        if l != k and alpha[l] >= alpha[k]:
            inter = graph.intersection(k, l)
            faces.append(inter.faces)
            edges.append(inter.edges)
            verts.append(inter.vertices)
    ff = np.unique(np.concatenate(faces)).astype(np.int64)
    fe = np.unique(np.concatenate(edges)).astype(np.int64)
    fv = np.unique(np.concatenate(verts)).astype(np.int64)

    covered_e = np.unique(mesh.face_edges[ff].ravel()) if len(ff) else np.zeros(0, np.int64)
    iso_e = np.setdiff1d(fe, covered_e)
    covered_v = np.unique(mesh.edges[fe].ravel()) if len(fe) else np.zeros(0, np.int64)
    iso_v = np.setdiff1d(fv, covered_v)

    boundary = part.boundaries[k]
    fine_face_set = set(ff.tolist())
    coarse = tuple(
        i for i, cf in enumerate(boundary.coarse_faces)
        if cf.faces.size and int(cf.faces[0]) in fine_face_set
    )

    iso_chains = _straight_chains(mesh, iso_e)

    comp = _union_find_components(fv, mesh.edges[fe]) if len(fv) else np.zeros(0, np.int64)
    roots = np.unique(comp)
    lip = []
    iso_v_set = set(iso_v.tolist())
    iso_e_set = set(iso_e.tolist())
    for r in roots:
        cverts = fv[comp == r]
        cset = set(cverts.tolist())
        has_iso_v = bool(iso_v_set & cset)
        ce = [e for e in iso_e_set if int(mesh.edges[e, 0]) in cset]
        if has_iso_v or ce:
            lip.append(False)
            continue
        cfaces = ff[np.isin(mesh.faces[ff][:, 0], cverts)]
        lip.append(_locally_edge_connected(mesh, cfaces))
    return GammaSet(
        k=k,
        coarse_faces=coarse,
        isolated_edges=iso_chains,
        isolated_vertices=tuple(int(v) for v in iso_v),
        fine_faces=ff,
        fine_edges=fe,
        fine_vertices=fv,
        n_components=len(roots),
        lipschitz_components=tuple(lip),
    )


def _straight_chains(mesh, edges: np.ndarray) -> tuple[np.ndarray, ...]:
    if len(edges) == 0:
        return ()
    ev = mesh.edges[edges]
    d = mesh.lattice[ev[:, 1]] - mesh.lattice[ev[:, 0]]
    dkey = [tuple(row) for row in d]
    out = []
    for key in sorted(set(dkey)):
        sel = np.array([dk == key for dk in dkey])
        el = edges[sel]
        verts = np.unique(mesh.edges[el])
        lab = _union_find_components(verts, mesh.edges[el])
        elab = lab[np.searchsorted(verts, mesh.edges[el][:, 0])]
        for c in np.unique(elab):
            out.append(np.sort(el[elab == c]))
    out.sort(key=lambda a: int(a[0]))
    return tuple(out)


def _locally_edge_connected(mesh, faces: np.ndarray) -> bool:
    """Around every vertex, the incident faces must be joined through shared edges."""
    if len(faces) == 0:
        return True
    by_vertex: dict[int, list[int]] = {}
    for f in faces:
        for v in mesh.faces[f]:
            by_vertex.setdefault(int(v), []).append(int(f))
    for v, fl in by_vertex.items():
        if len(fl) == 1:
            continue
        # faces around v are linked if they share an edge incident to v
        edge_map: dict[int, list[int]] = {}
        for i, f in enumerate(fl):
            for e in mesh.face_edges[f]:
                if v in mesh.edges[e]:
                    edge_map.setdefault(int(e), []).append(i)
        parent = list(range(len(fl)))

        def find(i):
            while parent[i] != i:
                i = parent[i]
            return i

        for members in edge_map.values():
            for a, b in zip(members[:-1], members[1:]):
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[rb] = ra
        if len({find(i) for i in range(len(fl))}) > 1:
            return False
    return True


# --------------------------------------------------------------------------
# quasi-monotonicity

@dataclass(frozen=True)
class LocalVerdict:
    entity: tuple          # ("vertex", id) or ("edge", tuple of fine edge ids)
    members: tuple[int, ...]
    on_boundary: bool
    ok: bool
    witness: int | None = None   # a subdomain that cannot climb


@dataclass(frozen=True)
class QuasiMonotonicity:
    vertices: tuple[LocalVerdict, ...]
    edges: tuple[LocalVerdict, ...]

    @property
    def vertex_ok(self) -> bool:
        return all(v.ok for v in self.vertices)

    @property
    def edge_ok(self) -> bool:
        return all(e.ok for e in self.edges)

    @property
    def ok(self) -> bool:
        return self.vertex_ok and self.edge_ok


def _interface_pairs(mesh, part, fine_faces) -> set[tuple[int, int]]:
    pairs = set()
    for f in fine_faces:
        t0, t1 = mesh.face_tets[f]
        if t1 < 0:
            continue
        a, b = int(part.tet_domain[t0]), int(part.tet_domain[t1])
        if a != b:
            pairs.add((min(a, b), max(a, b)))
    return pairs


def _climbs(start: int, targets: set[int], members, alpha, links) -> bool:
    floor = alpha[start]
    allowed = {m for m in members if alpha[m] >= floor}
    seen = {start}
    queue = deque([start])
    while queue:
        r = queue.popleft()
        if r in targets:
            return True
        for a, b in links:
            nxt = b if a == r else a if b == r else None
            if nxt is not None and nxt in allowed and nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return False


def _local_qm(members, alpha, links, on_boundary, boundary_members):
    """Face-chain criterion; returns (ok, failing subdomain)."""
    if on_boundary:
        for r in members:
            if not _climbs(r, boundary_members, members, alpha, links):
                return False, r
        return True, None
    amax = max(alpha[m] for m in members)
    best_fail = None
    for star in sorted(m for m in members if alpha[m] == amax):
        fail = next((r for r in members if not _climbs(r, {star}, members, alpha, links)), None)
        if fail is None:
            return True, None
        best_fail = fail if best_fail is None else best_fail
    return False, best_fail


def skeleton_edges(graph: SubdomainGraph) -> tuple[np.ndarray, ...]:
    """Fine-edge chains where coarse faces meet, grouped by direction and incident subdomains."""
    mesh, part = graph.mesh, graph.partition
    fine = set()
    for b in part.boundaries:
        for ce in b.coarse_edges:
            fine.update(int(e) for e in ce.edges)
    if not fine:
        return ()
    fine = np.array(sorted(fine))
    members = [tuple(np.flatnonzero(part.edge_mask[:, e])) for e in fine]
    groups: dict[tuple, list[int]] = {}
    for e, mem in zip(fine, members):
        groups.setdefault(mem, []).append(int(e))
    chains = []
    for mem in sorted(groups):
        chains.extend(_straight_chains(mesh, np.array(groups[mem])))
    chains.sort(key=lambda a: int(a[0]))
    return tuple(chains)


def check_quasi_monotone(graph: SubdomainGraph, coeffs: CoefficientField) -> QuasiMonotonicity:
    _check_index(graph, coeffs, 0)
    mesh, part = graph.mesh, graph.partition
    alpha = coeffs.alpha
    vf = mesh.vertex_faces()
    ef = mesh.edge_faces()

    vverdicts = []
    for v in graph.skeleton_vertices:
        v = int(v)
        members = tuple(int(m) for m in np.flatnonzero(part.vertex_mask[:, v]))
        fl = vf.indices[vf.indptr[v]:vf.indptr[v + 1]]
        links = _interface_pairs(mesh, part, fl)
        bnd = mesh.vertex_on_boundary[v]
        bmembers = set()
        if bnd:
            for f in fl:
                if mesh.face_on_boundary[f]:
                    bmembers.add(int(part.tet_domain[mesh.face_tets[f, 0]]))
        ok, fail = _local_qm(members, alpha, links, bnd, bmembers)
        vverdicts.append(LocalVerdict(("vertex", v), members, bool(bnd), ok, fail))

    everdicts = []
    for chain in skeleton_edges(graph):
        ok_all, fail_any = True, None
        members = tuple(int(m) for m in np.flatnonzero(part.edge_mask[:, chain[0]]))
        bnd = bool(mesh.edge_on_boundary[chain[0]])
        for e in chain:
            fl = ef.indices[ef.indptr[e]:ef.indptr[e + 1]]
            links = _interface_pairs(mesh, part, fl)
            bmembers = set()
            if mesh.edge_on_boundary[e]:
                for f in fl:
                    if mesh.face_on_boundary[f]:
                        bmembers.add(int(part.tet_domain[mesh.face_tets[f, 0]]))
            ok, fail = _local_qm(members, alpha, links, bool(mesh.edge_on_boundary[e]), bmembers)
            if not ok:
                ok_all, fail_any = False, fail
                break
        everdicts.append(LocalVerdict(("edge", tuple(int(e) for e in chain)), members, bnd, ok_all, fail_any))
    return QuasiMonotonicity(tuple(vverdicts), tuple(everdicts))


def check_generalized_qm(gammas) -> tuple[bool, tuple[tuple[int, int], ...]]:
    """True iff no Gamma_k has an isolated vertex; witnesses are (k, vertex)."""
    witnesses = tuple((g.k, v) for g in gammas for v in g.isolated_vertices)
    return (not witnesses), witnesses


# --------------------------------------------------------------------------
# strange vertices

@dataclass(frozen=True)
class StrangeVertex:
    vertex: int
    on_boundary: bool
    members: tuple[int, ...]    # Im_v
    regular: tuple[int, ...]    # Im*_v
    special: tuple[int, ...]    # Im^c_v

    @property
    def n_v(self) -> int:
        return len(self.special)


def _meets_only_at(part, r: int, rp: int, v: int, mesh) -> bool:
    """Locally around v, the closures of r and rp share nothing but v."""
    shared = np.flatnonzero(part.edge_mask[r] & part.edge_mask[rp])
    if len(shared) == 0:
        return True
    return not np.any(mesh.edges[shared] == v)


def detect_strange_vertices(graph: SubdomainGraph, coeffs: CoefficientField) -> tuple[StrangeVertex, ...]:
    _check_index(graph, coeffs, 0)
    mesh, part = graph.mesh, graph.partition
    alpha = coeffs.alpha
    out = []
    for v in graph.skeleton_vertices:
        v = int(v)
        members = tuple(int(m) for m in np.flatnonzero(part.vertex_mask[:, v]))
        if len(members) < 2:
            continue
        bnd = bool(mesh.vertex_on_boundary[v])
        special = []
        for r in members:
            higher = [rp for rp in members if rp != r and alpha[rp] >= alpha[r]]
            if all(_meets_only_at(part, r, rp, v, mesh) for rp in higher):
                special.append((r, bool(higher)))
        if bnd:
            amax = max(alpha[m] for m in members)
            be = graph.boundary_edges
            fires = False
            for r, _ in special:
                touches = np.any(mesh.edges[be[r]] == v) if len(be[r]) else False
                if not touches and alpha[r] == amax:
                    fires = True
            if not fires:
                continue
            # outside contact is what makes boundary members regular
            special = [
                (r, h) for r, h in special
                if not (len(be[r]) and np.any(mesh.edges[be[r]] == v))
            ]
        else:
            if not any(h for _, h in special):
                continue
        spec_ids = tuple(r for r, _ in special)
        regular = tuple(m for m in members if m not in spec_ids)
        out.append(StrangeVertex(v, bnd, members, regular, spec_ids))
    return tuple(out)


def multiplicity_ns(strange) -> int:
    return int(sum(s.n_v - 1 if not s.on_boundary else s.n_v for s in strange))


# --------------------------------------------------------------------------
# classification of strange-vertex subdomains

@dataclass(frozen=True)
class StrangeClassification:
    special_all: tuple[int, ...]      # Im^c_s
    regular_all: tuple[int, ...]      # Im (complement of Im^c_s)
    vertices_a: tuple[int, ...]       # V^a_s
    vertices_b: tuple[int, ...]       # V^b_s
    special_1: tuple[int, ...]        # Im^c_{s,1}
    special_2: tuple[int, ...]        # Im^c_{s,2}
    special_a: tuple[int, ...]        # Im^c_{s,a}
    special_b: tuple[int, ...]        # Im^c_{s,b}
    face_unions: dict = field(default_factory=dict)   # k -> coarse-face ids of the Gamma found


def _gamma_star_graph(graph, k, boundary_strange: set[int]):
    """Vertices and edges of (closure(Omega_k) on outer boundary) minus boundary strange vertices."""
    mesh = graph.mesh
    verts = set(int(v) for v in graph.boundary_vertices[k]) - boundary_strange
    edges = [tuple(int(x) for x in mesh.edges[e]) for e in graph.boundary_edges[k]]
    return verts, edges


def _face_union_ok(graph, k, subset, strange_on_k, gstar_v, gstar_e) -> bool:
    mesh = graph.mesh
    cfs = graph.partition.boundaries[k].coarse_faces
    fine = np.concatenate([cfs[i].faces for i in subset])
    fe = mesh.face_edges[fine].ravel()
    ue, cnt = np.unique(fe, return_counts=True)
    gverts = set(np.unique(mesh.faces[fine]).tolist())
    rim_v = set(np.unique(mesh.edges[ue[cnt == 1]]).tolist()) if np.any(cnt == 1) else set()
    if not all(v in rim_v for v in strange_on_k):
        return False
    gedges = [tuple(int(x) for x in mesh.edges[e]) for e in ue]
    nodes = np.array(sorted(gverts))
    if len(_np_unique_roots(nodes, gedges)) != 1:
        return False
    all_nodes = gverts | gstar_v
    links = gedges + [e for e in gstar_e if e[0] in all_nodes and e[1] in all_nodes]
    nodes = np.array(sorted(all_nodes))
    return len(_np_unique_roots(nodes, links)) == 1


def _np_unique_roots(nodes, links):
    if len(nodes) == 0:
        return []
    arr = np.array(links, dtype=np.int64).reshape(-1, 2)
    return np.unique(_union_find_components(nodes, arr))


def classify_strange(graph, coeffs, strange, max_faces: int = 16) -> StrangeClassification:
    n0 = graph.n_domains
    alpha = coeffs.alpha
    special_all = sorted({r for s in strange for r in s.special})
    regular_all = [k for k in range(n0) if k not in special_all]
    va, vb = [], []
    for s in strange:
        good = all(
            alpha[r] >= alpha[l]
            for r in s.special for l in regular_all if graph.intersects(r, l)
        )
        (va if good else vb).append(s.vertex)
    part = graph.partition
    strange_on = {
        k: [s.vertex for s in strange if part.vertex_mask[k, s.vertex]] for k in special_all
    }
    s1 = [k for k in special_all if all(v in va for v in strange_on[k])]
    s2 = [k for k in special_all if any(v in vb for v in strange_on[k])]
    boundary_strange = {s.vertex for s in strange if s.on_boundary}
    sa, unions = [], {}
    for k in s1:
        cfs = part.boundaries[k].coarse_faces
        nf = len(cfs)
        if nf > max_faces:
            raise ValueError(f"subdomain {k} has {nf} coarse faces; face-union search capped at {max_faces}")
        gv, ge = _gamma_star_graph(graph, k, boundary_strange)
        found = None
        for size in range(1, nf):
            for subset in itertools.combinations(range(nf), size):
                if _face_union_ok(graph, k, subset, strange_on[k], gv, ge):
                    found = subset
                    break
            if found:
                break
        if found:
            sa.append(k)
            unions[k] = found
    sb = [k for k in special_all if k not in sa]
    return StrangeClassification(
        tuple(special_all), tuple(regular_all), tuple(va), tuple(vb),
        tuple(s1), tuple(s2), tuple(sa), tuple(sb), unions,
    )


# --------------------------------------------------------------------------
# assumptions, rho class, levels, ancestors

@dataclass(frozen=True)
class AssumptionVerdict:
    holds: bool
    witnesses: tuple = ()
    detail: dict = field(default_factory=dict)


def check_beta_ordering(graph, coeffs) -> AssumptionVerdict:
    """beta_i <= tau beta_j for intersecting pairs with alpha_i < alpha_j.

    Pairs with equal alpha can be ordered either way, so they never fail.
    """
    a, b, tau = coeffs.alpha, coeffs.beta, coeffs.tau
    bad, worst = [], 0.0
    for i in range(graph.n_domains):
        for j in range(graph.n_domains):
            if i == j or not graph.intersects(i, j) or not a[i] < a[j]:
                continue
            ratio = b[i] / b[j]
            worst = max(worst, ratio)
            if ratio > tau:
                bad.append((i, j))
    return AssumptionVerdict(not bad, tuple(bad), {"max_beta_ratio": worst})


def check_gamma_shape(coeffs, gammas, subset) -> AssumptionVerdict:
    bad, rel = [], {}
    for k in subset:
        g = gammas[k]
        r = coeffs.relation(k)
        rel[k] = r
        if r == "beta<alpha":
            ok = not g.isolated_vertices and g.connected
            why = "Gamma must be a connected union of faces and edges"
        elif r == "alpha<beta":
            ok = g.faces_only
            why = "Gamma must be a union of faces"
        else:
            ok = not g.isolated_vertices
            why = "Gamma must be a union of faces and edges"
        if not ok:
            bad.append((k, why))
    return AssumptionVerdict(not bad, tuple(bad), {"relations": rel})


def check_strange_coefficients(coeffs, cls: StrangeClassification) -> AssumptionVerdict:
    a, b, tau = coeffs.alpha, coeffs.beta, coeffs.tau
    bad = []
    for k in cls.special_a:
        if not b[k] <= tau * a[k]:
            bad.append((k, "beta must be <~ alpha"))
    for k in cls.special_b:
        if coeffs.relation(k) != "equiv":
            bad.append((k, "alpha and beta must be comparable"))
    ratios = {k: b[k] / a[k] for k in cls.special_all}
    return AssumptionVerdict(not bad, tuple(bad), {"beta_over_alpha": ratios})


def check_assumptions(graph, coeffs, gammas, cls: StrangeClassification) -> dict[str, AssumptionVerdict]:
    return {
        "beta_ordering": check_beta_ordering(graph, coeffs),
        "gamma_shape": check_gamma_shape(coeffs, gammas, cls.regular_all),
        "strange_coefficients": check_strange_coefficients(coeffs, cls),
    }


def rho_class(gammas, subset=None) -> str:
    chosen = gammas if subset is None else [gammas[k] for k in subset]
    return "one" if all(g.lipschitz for g in chosen) else "log"


def sigma_levels(graph, coeffs) -> tuple[tuple[int, ...], ...]:
    """Group subdomains into levels of pairwise non-intersecting members, larger alpha first."""
    alpha = coeffs.alpha
    order = sorted(range(graph.n_domains), key=lambda k: (-alpha[k], k))
    level_of: dict[int, int] = {}
    levels: list[list[int]] = []
    for k in order:
        floor = 0
        for r, lv in level_of.items():
            if graph.intersects(k, r) and alpha[r] > alpha[k]:
                floor = max(floor, lv + 1)
        lv = floor
        while lv < len(levels) and any(graph.intersects(k, r) for r in levels[lv]):
            lv += 1
        if lv == len(levels):
            levels.append([])
        levels[lv].append(k)
        level_of[k] = lv
    return tuple(tuple(sorted(l)) for l in levels)


def ancestor_depths(graph, coeffs) -> tuple[tuple[int, ...], int]:
    """Longest chain of strict alpha increases through intersecting subdomains.

    Equal-alpha intersecting subdomains are merged (they do not add depth).
    Returns per-subdomain depth and the exponent max(2 L + 1).
    """
    n0, alpha = graph.n_domains, coeffs.alpha
    parent = list(range(n0))

    def find(i):
        while parent[i] != i:
            i = parent[i]
        return i

    for i in range(n0):
        for j in range(i + 1, n0):
            if alpha[i] == alpha[j] and graph.intersects(i, j):
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    depth = {}
    for r in sorted({find(i) for i in range(n0)}, key=lambda c: -alpha[c]):
        members = [i for i in range(n0) if find(i) == r]
        best = 0
        for i in members:
            for j in range(n0):
                if graph.intersects(i, j) and alpha[j] > alpha[i]:
                    best = max(best, depth[find(j)] + 1)
        depth[r] = best
    per = tuple(depth[find(i)] for i in range(n0))
    return per, max(2 * L + 1 for L in per)


# --------------------------------------------------------------------------
# full report

@dataclass(frozen=True, eq=False)
class TopologyReport:
    graph: SubdomainGraph
    coeffs: CoefficientField
    gammas: tuple[GammaSet, ...]
    quasi_monotone: QuasiMonotonicity
    generalized_qm: bool
    generalized_qm_witnesses: tuple
    strange: tuple[StrangeVertex, ...]
    ns: int
    classification: StrangeClassification
    assumptions: dict
    rho_class: str          # over the subdomains outside Im^c_s
    rho_class_all: str
    sigma_levels: tuple
    ancestor_depths: tuple[int, ...]
    exponent_m: int

    def to_dict(self) -> dict:
        mesh = self.graph.mesh
        part = self.graph.partition
        names = part.names

        def pt(v):
            return [float(c) for c in mesh.vertices[v]]

        def chain_ends(chain):
            ev = mesh.edges[chain]
            vs, cnt = np.unique(ev, return_counts=True)
            ends = vs[cnt == 1]
            return [pt(v) for v in ends]

        gam = []
        for g in self.gammas:
            cfs = part.boundaries[g.k].coarse_faces
            gam.append({
                "subdomain": names[g.k],
                "faces": [
                    {"neighbour": "boundary" if cfs[i].label == BOUNDARY else names[cfs[i].label],
                     "axis": "xyz"[cfs[i].axis], "at": cfs[i].level / mesh.n,
                     "fine_faces": int(len(cfs[i].faces))}
                    for i in g.coarse_faces
                ],
                "isolated_edges": [chain_ends(c) for c in g.isolated_edges],
                "isolated_vertices": [pt(v) for v in g.isolated_vertices],
                "connected": g.connected,
                "components": g.n_components,
                "lipschitz": g.lipschitz,
            })
        qm = self.quasi_monotone
        cls = self.classification
        nm = lambda ks: [names[k] for k in ks]  # noqa: E731
        return {
            "geometry": part.label,
            "n": mesh.n,
            "subdomains": list(names),
            "alpha": list(self.coeffs.alpha),
            "beta": list(self.coeffs.beta),
            "tau": self.coeffs.tau,
            "gamma_sets": gam,
            "quasi_monotone": {
                "vertices": qm.vertex_ok,
                "edges": qm.edge_ok,
                "failing_vertices": [
                    {"at": pt(v.entity[1]), "subdomain": names[v.witness]}
                    for v in qm.vertices if not v.ok
                ],
                "failing_edges": [
                    {"ends": chain_ends(np.array(e.entity[1])), "subdomain": names[e.witness]}
                    for e in qm.edges if not e.ok
                ],
            },
            "generalized_qm": self.generalized_qm,
            "generalized_qm_witnesses": [
                {"subdomain": names[k], "vertex": pt(v)} for k, v in self.generalized_qm_witnesses
            ],
            "strange_vertices": [
                {"at": pt(s.vertex), "boundary": s.on_boundary,
                 "im_star": nm(s.regular), "im_c": nm(s.special), "n_v": s.n_v}
                for s in self.strange
            ],
            "ns": self.ns,
            "classification": {
                "im_c_s": nm(cls.special_all), "im": nm(cls.regular_all),
                "v_a": [pt(v) for v in cls.vertices_a], "v_b": [pt(v) for v in cls.vertices_b],
                "im_c_s1": nm(cls.special_1), "im_c_s2": nm(cls.special_2),
                "im_c_sa": nm(cls.special_a), "im_c_sb": nm(cls.special_b),
            },
            "assumptions": {
                key: {
                    "holds": val.holds,
                    "witnesses": [
                        [names[w[0]], names[w[1]]] if isinstance(w[1], (int, np.integer))
                        else [names[w[0]], w[1]]
                        for w in val.witnesses
                    ],
                    "detail": _jsonable(val.detail, names),
                }
                for key, val in self.assumptions.items()
            },
            "rho_class": self.rho_class,
            "rho_class_all": self.rho_class_all,
            "sigma_levels": [nm(l) for l in self.sigma_levels],
            "ancestor_depths": {names[k]: d for k, d in enumerate(self.ancestor_depths)},
            "exponent_m": self.exponent_m,
        }


def _jsonable(detail: dict, names) -> dict:
    out = {}
    for key, val in detail.items():
        if isinstance(val, dict):
            out[key] = {names[k]: v for k, v in sorted(val.items())}
        else:
            out[key] = val
    return out


def analyze(graph: SubdomainGraph, coeffs: CoefficientField) -> TopologyReport:
    gammas = tuple(gamma_set(graph, coeffs, k) for k in range(graph.n_domains))
    qm = check_quasi_monotone(graph, coeffs)
    gqm, gqm_w = check_generalized_qm(gammas)
    strange = detect_strange_vertices(graph, coeffs)
    cls = classify_strange(graph, coeffs, strange)
    levels = sigma_levels(graph, coeffs)
    depths, m = ancestor_depths(graph, coeffs)
    return TopologyReport(
        graph=graph,
        coeffs=coeffs,
        gammas=gammas,
        quasi_monotone=qm,
        generalized_qm=gqm,
        generalized_qm_witnesses=gqm_w,
        strange=strange,
        ns=multiplicity_ns(strange),
        classification=cls,
        assumptions=check_assumptions(graph, coeffs, gammas, cls),
        rho_class=rho_class(gammas, cls.regular_all),
        rho_class_all=rho_class(gammas),
        sigma_levels=levels,
        ancestor_depths=depths,
        exponent_m=m,
    )

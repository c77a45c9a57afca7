import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hxjump import geometries
from hxjump.mesh import (GeometryConfig, GeometryError, assign_subdomains, build_structured_cube,
                         coarse_topology)

from conftest import mesh_of, partition_of


def test_single_cell_counts():
    m = build_structured_cube(1)
    assert m.n_vertices == 8 and m.n_tets == 6
    assert m.n_edges == 19
    assert m.edge_on_boundary.sum() == 18


def test_two_cell_counts():
    m = build_structured_cube(2)
    assert (m.n_vertices, m.n_tets) == (27, 48)


def test_zero_resolution_rejected():
    with pytest.raises(ValueError):
        build_structured_cube(0)


def _brute_force_edges(n):
    # independent enumeration: all vertex pairs that appear together in some tet
    m = build_structured_cube(n)
    pairs = set()
    for t in m.tets:
        for i in range(4):
            for j in range(i + 1, 4):
                pairs.add(tuple(sorted((int(t[i]), int(t[j])))))
    return m, pairs


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_mesh_invariants(n):
    m, pairs = _brute_force_edges(n)
    assert m.n_tets == 6 * n ** 3 and m.n_vertices == (n + 1) ** 3
    assert pairs == {tuple(e) for e in m.edges.tolist()}
    assert np.all(m.edges[:, 0] < m.edges[:, 1])
    assert np.all(m.volumes > 0)
    assert abs(m.volumes.sum() - 1.0) < 1e-12
    n_adj = (m.face_tets >= 0).sum(axis=1)
    assert np.all((n_adj == 1) == m.face_on_boundary)
    assert np.all(n_adj >= 1)
    on_face = np.zeros(m.n_edges, bool)
    on_face[m.face_edges[m.face_on_boundary].ravel()] = True
    assert np.array_equal(on_face, m.edge_on_boundary)
    # boundary vertices are those with a coordinate at 0 or 1
    expect = np.any((m.lattice == 0) | (m.lattice == n), axis=1)
    assert np.array_equal(expect, m.vertex_on_boundary)


def test_numbering_is_deterministic():
    a, b = build_structured_cube(3), build_structured_cube(3)
    for name in ("vertices", "edges", "faces", "tets", "tet_edges"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


@settings(max_examples=10, deadline=None)
@given(st.integers(min_value=1, max_value=5))
def test_volume_sums_to_one(n):
    assert abs(build_structured_cube(n).volumes.sum() - 1.0) < 1e-12


def test_single_region_owns_everything():
    m = mesh_of(2)
    part = assign_subdomains(m, geometries.single())
    assert np.all(part.tet_domain == 0)


def test_half_cube_split_counts():
    _, part, graph = partition_of("half_cube", 2)
    assert np.bincount(part.tet_domain).tolist() == [24, 24]
    assert graph.kind(0, 1) == "face"


def test_checkerboard_counts_follow_volumes():
    # the cubes are octants (volume 1/8), the L-shaped layers have volume 3/8
    m, part, _ = partition_of("checkerboard", 4)
    counts = np.bincount(part.tet_domain)
    expected = [round(v * 6 * 4 ** 3) for v in (1 / 8, 1 / 8, 3 / 8, 3 / 8)]
    assert counts.tolist() == expected == [48, 48, 144, 144]
    vol = np.bincount(part.tet_domain, weights=m.volumes)
    assert np.allclose(vol, [1 / 8, 1 / 8, 3 / 8, 3 / 8], atol=1e-12)


def test_checkerboard_intersection_classes():
    m, part, graph = partition_of("checkerboard", 4)
    inter = graph.intersection(0, 1)
    assert inter.kind == "vertex"
    assert m.vertices[inter.vertices].tolist() == [[0.5, 0.5, 0.5]]
    assert graph.kind(0, 3) == "face"
    sq = m.vertices[graph.intersection(0, 3).vertices]
    assert np.allclose(sq[:, 2], 0.5) and sq[:, :2].max() == 0.5
    for k in range(4):
        for l in range(4):
            if k != l:
                assert graph.kind(k, l) == graph.kind(l, k)


def test_intersection_class_uses_max_dimension():
    # blocks sharing face / edge / vertex with block000
    _, _, graph = partition_of("blocks_2x2x2", 2)
    assert graph.kind(0, 1) == "face"      # 001
    assert graph.kind(0, 3) == "edge"      # 011
    assert graph.kind(0, 7) == "vertex"    # 111


def test_interface_edges_realized_by_exactly_the_owning_subdomains():
    m, part, _ = partition_of("checkerboard", 4)
    for k, b in enumerate(part.boundaries):
        realized = set()
        for cf in b.coarse_faces:
            realized.update(cf.edges.tolist())
        owners = np.flatnonzero(part.edge_mask[k])
        interface = [e for e in owners if part.edge_mask[:, e].sum() > 1 or m.edge_on_boundary[e]]
        # every interface or outer-boundary edge of k lies on a coarse face of k
        assert set(interface) <= realized
        assert realized <= set(owners.tolist())


def test_misaligned_region_rejected():
    geo = GeometryConfig.from_dict({"regions": [{"name": "a", "boxes": [[0, 0, 0, 0.3, 1, 1]]},
                                                {"name": "b", "boxes": [[0.3, 0, 0, 1, 1, 1]]}]})
    with pytest.raises(GeometryError):
        assign_subdomains(mesh_of(2), geo)


def test_uncovered_and_overlapping_rejected():
    m = mesh_of(2)
    gap = GeometryConfig.from_dict({"regions": [{"name": "a", "boxes": [[0, 0, 0, 0.5, 1, 1]]}]})
    with pytest.raises(GeometryError):
        assign_subdomains(m, gap)
    overlap = GeometryConfig.from_dict({"regions": [{"name": "a", "boxes": [[0, 0, 0, 1, 1, 1]]},
                                                    {"name": "b", "boxes": [[0, 0, 0, 0.5, 1, 1]]}]})
    with pytest.raises(GeometryError):
        assign_subdomains(m, overlap)


def test_disconnected_region_rejected():
    geo = GeometryConfig.from_dict({"regions": [
        {"name": "a", "boxes": [[0, 0, 0, 0.25, 1, 1], [0.75, 0, 0, 1, 1, 1]]},
        {"name": "b", "boxes": [[0.25, 0, 0, 0.75, 1, 1]]}]})
    with pytest.raises(GeometryError):
        assign_subdomains(mesh_of(4), geo)


def test_geometry_json_roundtrip(tmp_path):
    doc = {"n": 2, "regions": [{"name": "lo", "boxes": [[0, 0, 0, 1, 1, 0.5]]},
                               {"name": "hi", "boxes": [[0, 0, 0.5, 1, 1, 1]], "alpha": 3, "beta": 4}]}
    path = tmp_path / "geo.json"
    path.write_text(json.dumps(doc))
    geo = GeometryConfig.from_json(path)
    assert geo.n == 2 and geo.regions[1].alpha == 3.0
    part = assign_subdomains(build_structured_cube(geo.n), geo)
    assert coarse_topology(part.mesh, part).kind(0, 1) == "face"

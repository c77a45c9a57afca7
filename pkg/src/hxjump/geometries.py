"""Preset box partitions of the unit cube used by the experiments."""
from __future__ import annotations

import itertools

from .mesh import GeometryConfig, Region

H = 0.5


def single() -> GeometryConfig:
    return GeometryConfig(regions=(Region("omega", ((0, 0, 0, 1, 1, 1),)),), label="single")


def half_cube() -> GeometryConfig:
    """Stand-in (a) for the two-region split: {z < 1/2} and {z > 1/2}."""
    return GeometryConfig(
        regions=(
            Region("D1", ((0, 0, 0, 1, 1, H),)),
            Region("D2", ((0, 0, H, 1, 1, 1),)),
        ),
        label="half_cube (stand-in)",
    )


def interlock() -> GeometryConfig:
    """Stand-in (b): two congruent interlocking L-shaped regions."""
    return GeometryConfig(
        regions=(
            Region("D1", ((0, 0, 0, H, 1, H), (H, 0, H, 1, 1, 1))),
            Region("D2", ((H, 0, 0, 1, 1, H), (0, 0, H, H, 1, 1))),
        ),
        label="interlock (stand-in)",
    )


def checkerboard() -> GeometryConfig:
    """Two diagonal octant cubes plus the two remaining half-layers."""
    return GeometryConfig(
        regions=(
            Region("omega1", ((0, 0, 0, H, H, H),)),
            Region("omega2", ((H, H, H, 1, 1, 1),)),
            Region("omega3", ((H, 0, 0, 1, 1, H), (0, H, 0, H, 1, H))),
            Region("omega4", ((0, 0, H, H, 1, 1), (H, 0, H, 1, H, 1))),
        ),
        label="checkerboard",
    )


def blocks_2x2x2() -> GeometryConfig:
    """Eight octant blocks, indexed by (i, j, k) in lexicographic order."""
    regions = []
    for i, j, k in itertools.product(range(2), repeat=3):
        box = (i * H, j * H, k * H, (i + 1) * H, (j + 1) * H, (k + 1) * H)
        regions.append(Region(f"block{i}{j}{k}", (box,)))
    return GeometryConfig(regions=tuple(regions), label="blocks_2x2x2")


def boxes_chain(levels: int = 3) -> GeometryConfig:
    """Slabs stacked along x, each sharing a full face with the next."""
    w = 1.0 / levels
    regions = tuple(
        Region(f"slab{i}", ((i * w, 0, 0, (i + 1) * w, 1, 1),)) for i in range(levels)
    )
    return GeometryConfig(regions=regions, label=f"chain{levels}")


PRESETS = {
    "single": single,
    "half_cube": half_cube,
    "interlock": interlock,
    "checkerboard": checkerboard,
    "blocks_2x2x2": blocks_2x2x2,
}

import functools

import pytest

from hxjump import geometries
from hxjump.assembly import assemble_system
from hxjump.mesh import assign_subdomains, build_structured_cube, coarse_topology
from hxjump.topology import CoefficientField

ACCEPTANCE_LINES: list[str] = []


@functools.lru_cache(maxsize=None)
def mesh_of(n):
    return build_structured_cube(n)


@functools.lru_cache(maxsize=None)
def partition_of(geometry, n):
    mesh = mesh_of(n)
    part = assign_subdomains(mesh, geometries.PRESETS[geometry]())
    return mesh, part, coarse_topology(mesh, part)


@functools.lru_cache(maxsize=None)
def system_of(geometry, n, alpha, beta):
    mesh, part, _ = partition_of(geometry, n)
    return assemble_system(mesh, part, CoefficientField(alpha, beta))


def case_coeffs(case, value, n_domains=2):
    """alpha, beta tuples for the named coefficient templates."""
    one = (1.0,) * n_domains
    if case == "a":
        return one, (1.0,) + (10.0 ** value,) * (n_domains - 1)
    if case == "b":
        return (1.0,) + (10.0 ** value,) * (n_domains - 1), one
    if case == "checkerboard":
        e = float(value)
        return (1.0, 1.0, e, e), (e, e, e, e)
    return one, one


@pytest.fixture
def build():
    return system_of


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

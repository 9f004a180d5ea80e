import numpy as np
import pytest

from nonlocal_ircp import (
    DomainSpec,
    FractionalSpec,
    KernelSpec,
    assemble_L,
    build_nodes,
    default_sensor,
    uniform_times,
)


@pytest.fixture(scope="session")
def standard():
    """d = 1, h = 1/32, horizon 4h, beta = 1/4, T = 1 with 64 steps, right-hand sensor."""
    nodes = build_nodes(DomainSpec(((0.0, 1.0),), h=1 / 32, horizon=4 / 32, accessible="right"))
    kernel = KernelSpec(beta=0.25, gamma_lo=1.0)
    op = assemble_L(nodes, kernel)
    times = uniform_times(1.0, 64)
    return {
        "nodes": nodes,
        "kernel": kernel,
        "op": op,
        "times": times,
        "sensor": default_sensor(nodes, times),
        "v": times.copy(),
        "x": nodes.coords[nodes.interior, 0],
        "frac": FractionalSpec(0.7, (0.3,), (0.5,), dt=1 / 64, T=1.0),
    }


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        passed, detail = results[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")

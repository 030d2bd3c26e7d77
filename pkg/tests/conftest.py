import numpy as np
import pytest

from polyvem.mesh import gen_quad, gen_tria, gen_voronoi


@pytest.fixture(scope="session")
def small_meshes():
    """One small mesh per family."""
    return {
        "quad": gen_quad(4),
        "tria": gen_tria(4, perturb=0.2, rng_seed=3),
        "voro": gen_voronoi(24, 30, 0),
        "rand": gen_voronoi(24, 0, 1),
    }


def regular_polygon(m, radius=1.0, center=(0.0, 0.0), phase=0.0):
    t = phase + 2 * np.pi * np.arange(m) / m
    return np.column_stack([center[0] + radius * np.cos(t), center[1] + radius * np.sin(t)])


def random_convex_polygon(rng, n_max=9):
    """Convex hull of random points, CCW."""
    from scipy.spatial import ConvexHull

    while True:
        pts = rng.uniform(-1, 1, size=(rng.integers(3, n_max + 1), 2))
        try:
            hull = ConvexHull(pts)
        except Exception:
            continue
        poly = pts[hull.vertices]
        t = np.roll(poly, -1, 0) - poly
        if len(poly) >= 3 and np.hypot(*t.T).min() > 1e-2 and hull.volume > 1e-2:
            return poly


def random_star_polygon(rng, n_min=3, n_max=10):
    """Shape-regular random polygon: sorted angles with a minimum gap, radii in [0.5, 1]."""
    while True:
        m = int(rng.integers(n_min, n_max + 1))
        t = np.sort(rng.uniform(0, 2 * np.pi, m))
        gaps = np.diff(np.concatenate([t, [t[0] + 2 * np.pi]]))
        if gaps.min() > 0.3 and gaps.max() < np.pi - 0.2:
            r = rng.uniform(0.5, 1.0, m)
            c = rng.uniform(-5, 5, 2)
            return c + np.column_stack([r * np.cos(t), r * np.sin(t)])


ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"ACCEPTANCE {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)

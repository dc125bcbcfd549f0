import numpy as np
import pytest

from raarlab.convex import (
    AffineSubspace,
    Ball,
    Box,
    ConvergenceError,
    HalfSpace,
    aar_increments,
    aar_operator,
    fixed_point_solve,
    gap_vector,
    geometry_suite,
    project_convex,
    raar_convex_operator,
    run_convex_suite,
    verify_step_relation,
    verify_fixed_point_set,
)

LOWER = HalfSpace([1.0], 0.0)      # (-inf, 0]
UPPER2 = HalfSpace([-1.0], -2.0)   # [2, inf)


def test_projectors():
    assert project_convex(LOWER, [3.0]) == pytest.approx([0.0])
    assert project_convex(Ball([4.0, 0.0], 1.0), [0.0, 0.0]) == pytest.approx([3.0, 0.0])
    assert project_convex(Box([0, 0], [1, 1]), [2.0, -1.0]) == pytest.approx([1.0, 0.0])
    line = AffineSubspace([0.0, 2.0], [[1.0], [0.0]])
    assert project_convex(line, [5.0, -1.0]) == pytest.approx([5.0, 2.0])


def test_set_validation():
    with pytest.raises(ValueError):
        HalfSpace([2.0], 0.0)
    with pytest.raises(ValueError):
        Ball([0.0], 0.0)
    with pytest.raises(ValueError):
        Box([1.0], [0.0])
    with pytest.raises(ValueError):
        AffineSubspace([0.0, 0.0], [[1.0], [1.0]])
    with pytest.raises(ValueError):
        LOWER.project([1.0, 2.0])


@pytest.mark.parametrize("name", list(geometry_suite()))
def test_projectors_idempotent_and_firmly_nonexpansive(name, rng):
    for C in geometry_suite()[name]:
        for _ in range(50):
            x, y = rng.uniform(-6, 6, (2, C.dimension))
            px, py = C.project(x), C.project(y)
            np.testing.assert_allclose(C.project(px), px, atol=1e-12)
            assert np.dot(px - py, px - py) <= np.dot(px - py, x - y) + 1e-12
            # nearest among sampled members
            for _ in range(5):
                z = C.project(rng.uniform(-6, 6, C.dimension))
                assert np.linalg.norm(x - px) <= np.linalg.norm(x - z) + 1e-12


def test_raar_convex_values():
    assert raar_convex_operator(LOWER, UPPER2, 0.5, [0.0]) == pytest.approx([0.0])
    upper0 = HalfSpace([-1.0], 0.0)
    lower1 = HalfSpace([1.0], 1.0)
    assert raar_convex_operator(lower1, upper0, 0.5, [5.0]) == pytest.approx([3.0])
    for u in np.linspace(0, 1, 7):
        assert raar_convex_operator(lower1, upper0, 0.3, [u]) == pytest.approx([u])
    with pytest.raises(ValueError):
        raar_convex_operator(LOWER, UPPER2, 1.2, [0.0])


def test_gap_vector_closed_forms():
    d = gap_vector(LOWER, UPPER2)
    assert d.gap == pytest.approx([2.0]) and d.nearest_in_B == pytest.approx([2.0])
    assert d.nearest_in_A == pytest.approx([0.0]) and not d.consistent
    d = gap_vector(Ball([0, 0], 1.0), Ball([4, 0], 1.0))
    assert d.gap == pytest.approx([2.0, 0.0])
    d = gap_vector(Ball([0, 0], 1.0), Ball([1, 0], 1.0))
    assert d.consistent and d.gap_norm == 0
    assert Ball([0, 0], 1.0).contains(d.nearest_in_B) and Ball([1, 0], 1.0).contains(d.nearest_in_B)
    d = gap_vector(Box([0, 0], [1, 1]), Box([2, 0.5], [3, 2.5]))
    assert d.gap == pytest.approx([1.0, 0.0])
    point = AffineSubspace([3.0, -2.0], np.zeros((2, 0)))
    d = gap_vector(point, Box([0, 0], [1, 1]))
    assert d.gap == pytest.approx([-2.0, 2.0])


def test_gap_vector_by_alternating_projections():
    A, B = geometry_suite()["line-vs-ball-2d"]
    d = gap_vector(A, B)
    assert d.method == "alternating-projections"
    assert d.gap == pytest.approx([0.0, -1.5], abs=1e-9)
    A, B = geometry_suite()["overlapping-half-spaces-2d"]
    assert gap_vector(A, B).consistent


def test_cap_exhaustion_is_reported():
    # tangent ball and half-plane: alternating projections converge sublinearly
    A = Ball([0.0, 0.0], 1.0)
    B = HalfSpace(np.array([0.0, -1.0]), -1.0)
    with pytest.raises(ConvergenceError):
        gap_vector(A, B, tol=1e-14, cap=50, start=[5.0, 5.0])


def test_fixed_point_solve_closed_forms():
    assert fixed_point_solve(LOWER, UPPER2, 0.5, [7.0]) == pytest.approx([0.0], abs=1e-9)
    assert fixed_point_solve(LOWER, UPPER2, 0.75, [7.0]) == pytest.approx([-4.0], abs=1e-9)
    A, B = Box([0, 0], [2, 2]), Box([1, 1], [3, 3])
    u = fixed_point_solve(A, B, 0.6, [9.0, -4.0])
    assert A.contains(B.project(u), 1e-8) and B.contains(u, 1e-8)
    with pytest.raises(ConvergenceError):
        fixed_point_solve(LOWER, UPPER2, 0.9, [1e6], cap=3)
    with pytest.raises(ValueError):
        fixed_point_solve(LOWER, UPPER2, 1.0, [0.0])


@pytest.mark.parametrize("name", list(geometry_suite()))
@pytest.mark.parametrize("beta", [0.25, 0.5, 0.9])
def test_fixed_point_checks(name, beta, rng):
    A, B = geometry_suite()[name]
    starts = [rng.uniform(-5, 5, A.dimension) for _ in range(3)]
    report = verify_fixed_point_set(A, B, beta, starts, geometry=name)
    assert report.ok, report.to_dict()


def test_consistent_case_degenerates_to_membership(rng):
    A, B = Box([0, 0], [2, 2]), Box([1, 1], [3, 3])
    report = verify_fixed_point_set(A, B, 0.5, [rng.uniform(-5, 5, 2) for _ in range(3)])
    assert report.ok
    assert report.residuals["i_translate"] <= 1e-8


def test_prop23_half_lines():
    rep = verify_step_relation(LOWER, UPPER2, 0.5, 0.75, delta=0.1, samples=100, start=[3.0])
    assert rep.residuals["step_relation"] <= 1e-8
    assert raar_convex_operator(LOWER, UPPER2, 0.75, [0.0]) == pytest.approx([-1.0])
    assert rep.passed["perturbation"]
    same = verify_step_relation(LOWER, UPPER2, 0.5, 0.5, delta=0.1, samples=10, start=[3.0])
    assert same.residuals["displacement"] <= 1e-8


def test_nice_identity(rng):
    for A, B in geometry_suite().values():
        for _ in range(50):
            u = rng.uniform(-10, 10, A.dimension)
            lhs = u - aar_operator(A, B, u)
            rhs = B.project(u) - A.project(2 * B.project(u) - u)
            np.testing.assert_allclose(lhs, rhs, atol=1e-12)


@pytest.mark.parametrize("beta", [0.3, 0.7, 1.0])
def test_nonexpansive(beta, rng):
    for A, B in geometry_suite().values():
        for _ in range(30):
            u, v = rng.uniform(-8, 8, (2, A.dimension))
            du = raar_convex_operator(A, B, beta, u) - raar_convex_operator(A, B, beta, v)
            assert np.linalg.norm(du) <= np.linalg.norm(u - v) + 1e-12


def test_aar_drifts_along_negative_gap():
    inc = aar_increments(LOWER, UPPER2, [0.3], burn_in=200, count=100)
    assert np.max(np.abs(inc + 2.0)) <= 1e-6


def test_consistent_shadows_land_in_intersection(rng):
    A, B = geometry_suite()["overlapping-half-spaces-2d"]
    u = rng.uniform(-5, 5, 2)
    for _ in range(2000):
        u = raar_convex_operator(A, B, 0.8, u)
    pb = B.project(u)
    assert A.contains(pb, 1e-8) and B.contains(pb, 1e-8)


def test_suite_report_shape():
    out = run_convex_suite(betas=(0.5,), starts=2, step_pairs=((0.5, 0.75),), samples=10)
    assert out["all_pass"]
    r = out["reports"][0]
    assert set(r) == {"check", "geometry", "betas", "residuals", "pass"}

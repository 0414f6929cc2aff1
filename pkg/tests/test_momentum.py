import cmath
import math

import numpy as np
import pytest
from conftest import make_problem

from wkbpole.errors import AmbiguousBranch, PoleHit, StepCollapse, TurningPoint
from wkbpole.momentum import (
    Cut,
    PathPolyline,
    branch_at,
    contour_coefficients,
    continue_along,
    decompose_near_pole,
    log_minus,
    nearest_log,
    nearest_momentum,
    nearest_root,
    reference_branch,
    sqrt_minus,
    sqrt_sin,
)
from wkbpole.potential import MeromorphicPotential, SpectralProblem, Strip

OFF_CUT = [-0.2 + 0.1j, 0.15 + 0.2j, 0.25 - 0.1j, -0.3 - 0.3j, 0.05 - 0.02j]


def test_log_minus_and_sqrt_minus_branches() -> None:
    assert log_minus(-1.0) == 0
    assert log_minus(2.0) == pytest.approx(complex(math.log(2.0), -math.pi))
    assert log_minus(2.0 + 1e-12j) == pytest.approx(log_minus(2.0), abs=1e-9)
    assert sqrt_minus(-4.0) == pytest.approx(2.0)
    assert sqrt_minus(4.0) == pytest.approx(-2.0j)


def test_nearest_helpers_pick_the_closest_branch() -> None:
    w = 1.0 + 3.0j
    p = nearest_momentum(w, 0.3 - 1.0j)
    assert 2.0 * cmath.cos(p) + w == pytest.approx(0.0, abs=1e-12)
    assert nearest_momentum(w, p + 2.0 * math.pi) == pytest.approx(p + 2.0 * math.pi)
    assert nearest_momentum(w, -p) == pytest.approx(-p)

    assert nearest_root(4.0, -1.8) == pytest.approx(-2.0)
    assert nearest_log(-1.0, 6.0j) == pytest.approx(2j * math.pi)


def test_reference_branch_has_negative_imaginary_part_on_the_cut_strip() -> None:
    problem = make_problem()
    branch = reference_branch(problem)

    for z in OFF_CUT:
        p = branch.value_at(z)
        assert p.imag < 0
        assert 2.0 * cmath.cos(p) + problem.w(z) == pytest.approx(0.0, abs=1e-10)

    np.testing.assert_allclose(branch.values_at(OFF_CUT[:2]), [branch.value_at(z) for z in OFF_CUT[:2]])


def test_reference_branch_base_value() -> None:
    branch = reference_branch(make_problem())

    assert branch.base_point == -0.175
    assert branch.cut is Cut.POSITIVE
    assert -math.pi < branch.base_value.real <= math.pi
    assert branch.base_value.imag < 0
    assert branch.base_root**2 == pytest.approx(cmath.sin(branch.base_value))


def test_branch_at_rejects_ambiguous_points() -> None:
    problem = make_problem()
    with pytest.raises(AmbiguousBranch):
        branch_at(problem, 0.2)

    flat = SpectralProblem(MeromorphicPotential.constant(-1.0), Strip(0.35, 0.35))
    with pytest.raises(AmbiguousBranch):
        branch_at(flat, -0.1)

    turning = SpectralProblem(MeromorphicPotential.constant(-2.0), Strip(0.35, 0.35))
    with pytest.raises(TurningPoint):
        branch_at(turning, -0.1)


def test_crossing_rplus_shifts_p_by_two_pi_and_flips_the_root() -> None:
    branch = reference_branch(make_problem())

    for z in (0.1 - 0.03j, 0.25 - 0.05j):
        below = branch.state_at(z)
        up = branch.state_at(z, upper=True)
        assert up.p - below.p == pytest.approx(2.0 * math.pi, abs=1e-10)
        assert up.root == pytest.approx(-below.root, rel=1e-10)
        assert up.log - below.log == pytest.approx(-2j * math.pi, abs=1e-10)


def test_mirrored_branch_agrees_above_the_real_axis() -> None:
    branch = reference_branch(make_problem())
    mirror = branch.mirrored(0.245)

    assert mirror.cut is Cut.NEGATIVE
    for z in (0.1 + 0.05j, -0.2 + 0.1j):
        assert mirror.value_at(z) == pytest.approx(branch.value_at(z), abs=1e-10)
    # below R+ the mirror continues p from above
    z = 0.2 - 0.05j
    assert mirror.value_at(z) == pytest.approx(branch.value_at(z, upper=True), abs=1e-10)
    with pytest.raises(ValueError):
        branch.mirrored(-0.1)
    with pytest.raises(ValueError):
        mirror.mirrored(0.1)


def test_sqrt_sin_squares_to_sin_p() -> None:
    branch = reference_branch(make_problem())
    z = -0.1 + 0.2j

    assert sqrt_sin(branch, z) ** 2 == pytest.approx(cmath.sin(branch.value_at(z)), rel=1e-12)


def test_continue_along_follows_the_path() -> None:
    problem = make_problem()
    branch = reference_branch(problem)
    path = PathPolyline.through([-0.175, -0.175 + 0.2j, 0.2 + 0.2j], max_step=0.02)

    values = continue_along(branch, path)

    assert values[0] == branch.base_value
    assert values[-1] == pytest.approx(branch.value_at(0.2 + 0.2j), abs=1e-10)
    assert all(abs(b - a) < math.pi / 4 for a, b in zip(values, values[1:]))


def test_path_through_the_pole_is_rejected() -> None:
    branch = reference_branch(make_problem())

    with pytest.raises((PoleHit, StepCollapse)):
        branch.track(PathPolyline((-0.1 + 0j, 0.1 + 0j)))


def test_path_polyline_validation() -> None:
    with pytest.raises(ValueError):
        PathPolyline((0j,))
    with pytest.raises(ValueError):
        PathPolyline((0j, 0j, 1j))

    path = PathPolyline.through([0j, 0j, 1j, 1 + 1j])
    assert path.vertices == (0j, 1j, 1 + 1j)
    assert path.length == pytest.approx(2.0)
    assert path.reversed().start == 1 + 1j
    assert (path + PathPolyline((1 + 1j, 2 + 1j))).end == 2 + 1j
    with pytest.raises(ValueError):
        path + PathPolyline((5j, 6j))


def test_near_pole_constant_of_the_reference_potential() -> None:
    # for w = 1/z + 0.3 z the momentum is i ln(-z) + O(z^2) near 0, so C = pi
    decomposition = decompose_near_pole(make_problem())

    assert decomposition.constant == pytest.approx(math.pi, abs=1e-6)
    assert abs(decomposition.g(-1e-3)) < 1e-3
    assert abs(decomposition.g(1e-3j)) < 1e-3


@pytest.mark.parametrize("direction", [1.0, 1j, -1j, cmath.exp(0.6j), cmath.exp(-0.6j)])
def test_near_pole_constant_does_not_depend_on_the_ray(direction: complex) -> None:
    decomposition = decompose_near_pole(make_problem(), direction=direction)

    assert decomposition.constant == pytest.approx(math.pi, abs=1e-6)
    assert decomposition.spread < 1e-8


def test_loop_around_the_pole_shifts_p_by_minus_two_pi() -> None:
    branch = reference_branch(make_problem())
    # counterclockwise around 0, crossing R+ upwards
    loop = PathPolyline.through(
        [-0.175, -0.175 - 0.2j, 0.2 - 0.2j, 0.2 + 0.2j, -0.175 + 0.2j, -0.175], max_step=0.02
    )

    values = continue_along(branch, loop)
    end = branch.track(loop).end

    assert values[-1] - values[0] == pytest.approx(-2.0 * math.pi, abs=1e-10)
    assert end.log - branch.base_state.log == pytest.approx(2j * math.pi, abs=1e-10)
    assert end.root == pytest.approx(-branch.base_state.root, rel=1e-10)


def test_contour_coefficients_detect_negative_orders() -> None:
    analytic = contour_coefficients(np.exp, 0.5)
    assert analytic.negative_relative < 1e-12

    singular = contour_coefficients(lambda z: 1.0 / z + z, 0.5)
    assert singular.negative_relative == pytest.approx(1.0)
    assert singular.coefficients[singular.orders == 1][0] == pytest.approx(0.5)

    with pytest.raises(ValueError):
        contour_coefficients(np.exp, 0.5, points=7)


def test_regularized_momentum_has_no_negative_orders_at_the_pole() -> None:
    branch = reference_branch(make_problem())

    def regularized(zs: np.ndarray) -> np.ndarray:
        states = [branch.state_at(complex(z)) for z in zs]
        return np.array([s.p - 1j * s.log for s in states])

    report = contour_coefficients(regularized, 0.1, points=64)

    assert report.negative_relative < 1e-8

import cmath
import math

import numpy as np
import pytest
from conftest import make_problem

from wkbpole.asymptotics import AsymptoticModel
from wkbpole.errors import (
    DegenerateBasis,
    IllConditioned,
    OutsideSeedRegion,
    OutsideStrip,
    Overflow,
    PoleOnLattice,
    RangeError,
)
from wkbpole.lattice_solver import (
    Direction,
    LatticeLine,
    coefficient_conditions,
    coefficients,
    line_to,
    linear_combination,
    log_wronskian,
    propagate,
    recurrence_residual,
    residue_extrapolation,
    seed_depth,
    seed_wkb,
    solve_f_minus,
    solve_f_plus,
    solve_phi,
    solve_psi,
    spanning_line,
    wronskian,
    wronskian_condition,
    wronskian_drift,
)
from wkbpole.logspace import LogValue
from wkbpole.potential import MeromorphicPotential, SpectralProblem, Strip
from wkbpole.settings import NumericsSettings

# roots of l + 1/l + 3 = 0
GROWING = (-3 - math.sqrt(5)) / 2
DECAYING = (-3 + math.sqrt(5)) / 2


def _powers(line: LatticeLine, root: float) -> tuple[LogValue, LogValue]:
    return LogValue.of(root**line.k_min), LogValue.of(root ** (line.k_min + 1))


def test_lattice_line_geometry() -> None:
    line = LatticeLine(0.1 + 0.2j, 0.01, -3, 2)

    assert line.size == 6
    assert list(line.ks) == [-3, -2, -1, 0, 1, 2]
    assert line.point(-3) == pytest.approx(0.07 + 0.2j)
    assert line.index(2) == 5
    with pytest.raises(RangeError):
        line.index(3)
    with pytest.raises(ValueError):
        LatticeLine(0j, 0.0, 0, 2)
    with pytest.raises(ValueError):
        LatticeLine(0j, 0.01, 2, 2)


def test_forward_recursion_reproduces_powers(calibration: SpectralProblem) -> None:
    line = LatticeLine(-0.3 + 0j, 0.001, 0, 600)

    solution = propagate(calibration, line, _powers(line, GROWING))

    for k in (2, 100, 600):
        assert solution.at(k).relative_deviation(LogValue(k * np.log(complex(GROWING)))) < 1e-9
    assert solution.provenance.direction is Direction.FORWARD
    assert solution.provenance.ks == (0, 1)
    assert recurrence_residual(calibration, solution) < 1e-12


def test_constant_potential_matches_the_plane_wave() -> None:
    problem = SpectralProblem(MeromorphicPotential.constant(5.0), Strip(0.35, 0.35))
    p = complex(math.pi, -math.acosh(2.5))  # 2 cos p + 5 = 0 with Im p < 0
    line = LatticeLine(-0.3 + 0j, 0.003, 0, 200)

    solution = propagate(problem, line, (1.0, cmath.exp(1j * p)))

    for k in (50, 200):
        assert solution.at(k).relative_deviation(LogValue(1j * p * k)) < 1e-11


def test_backward_recursion_reproduces_powers(calibration: SpectralProblem) -> None:
    line = LatticeLine(-0.3 + 0j, 0.001, 0, 600)
    seeds = (LogValue(599 * np.log(complex(DECAYING))), LogValue(600 * np.log(complex(DECAYING))))

    solution = propagate(calibration, line, seeds, direction=Direction.BACKWARD)

    assert solution.at(0).relative_deviation(LogValue(0j)) < 1e-9
    assert solution.at(300).relative_deviation(LogValue(300 * np.log(complex(DECAYING)))) < 1e-9
    assert solution.provenance.ks == (599, 600)


def test_wronskian_of_power_solutions_is_constant(calibration: SpectralProblem) -> None:
    line = LatticeLine(-0.2 + 0.1j, 0.01, 0, 40)
    growing = propagate(calibration, line, _powers(line, GROWING))
    seeds = (LogValue.of(DECAYING**39), LogValue.of(DECAYING**40))
    decaying = propagate(calibration, line, seeds, direction=Direction.BACKWARD)

    # l1^(k+1) l2^k - l1^k l2^(k+1) = l1 - l2 since l1 l2 = 1
    for k in (0, 17, 39):
        assert wronskian(growing, decaying, k) == pytest.approx(GROWING - DECAYING, rel=1e-9)
    assert wronskian_drift(growing, decaying) < 1e-9
    assert log_wronskian(growing, growing, 5).log.real == -math.inf


def test_basis_coefficients_of_a_combination(calibration: SpectralProblem) -> None:
    line = LatticeLine(-0.2 + 0.1j, 0.01, 0, 40)
    growing = propagate(calibration, line, _powers(line, GROWING))
    decaying = propagate(
        calibration, line, (LogValue.of(DECAYING**39), LogValue.of(DECAYING**40)), direction=Direction.BACKWARD
    )
    combined = linear_combination([2.0, 3.0 - 1.0j], [growing, decaying])

    a, b = coefficients(combined, growing, decaying, 3)

    assert a == pytest.approx(2.0, rel=1e-8)
    assert b == pytest.approx(3.0 - 1.0j, rel=1e-8)
    with pytest.raises(DegenerateBasis):
        coefficients(combined, growing, growing, 3)


def test_power_basis_wronskian_barely_cancels(calibration: SpectralProblem) -> None:
    line = LatticeLine(-0.2 + 0.1j, 0.01, 0, 40)
    growing = propagate(calibration, line, _powers(line, GROWING))
    decaying = propagate(
        calibration, line, (LogValue.of(DECAYING**39), LogValue.of(DECAYING**40)), direction=Direction.BACKWARD
    )

    # terms |l1| and |l2| against |l1 - l2|
    for k in (0, 20, 39):
        assert wronskian_condition(growing, decaying, k) == pytest.approx(3 / math.sqrt(5), rel=1e-9)
    assert wronskian_condition(growing, growing, 5) == math.inf


def test_coefficients_refuse_unresolved_components(calibration: SpectralProblem) -> None:
    line = LatticeLine(-0.2 + 0.1j, 0.01, 0, 40)
    growing = propagate(calibration, line, _powers(line, GROWING))
    decaying = propagate(
        calibration, line, (LogValue.of(DECAYING**39), LogValue.of(DECAYING**40)), direction=Direction.BACKWARD
    )
    combined = linear_combination([2.0, 3.0 - 1.0j], [growing, decaying])

    condition_a, condition_b = coefficient_conditions(combined, growing, decaying, 3)

    assert condition_a == pytest.approx(6 / math.sqrt(5), rel=1e-2)
    # the decaying part sits under a growing part 500 times larger
    assert 100 < condition_b < 1000
    with pytest.raises(IllConditioned, match="coefficient b"):
        coefficients(combined, growing, decaying, 3, max_condition=10)
    a, b = coefficients(combined, growing, decaying, 3, max_condition=1e3)
    assert a == pytest.approx(2.0, rel=1e-8)
    assert b == pytest.approx(3.0 - 1.0j, rel=1e-8)


def test_phi_has_no_resolvable_f_plus_component(model: AsymptoticModel) -> None:
    problem = model.problem
    line = spanning_line(problem, 0.5 * problem.strip.d_y, model.h)
    f_plus = solve_f_plus(model, line)
    f_minus = solve_f_minus(model, line)
    phi = solve_phi(model, line)
    third = line.size // 3
    ks = range(line.k_min + third, line.k_max - third, max(1, third // 4))

    conditions = [coefficient_conditions(phi, f_plus, f_minus, k) for k in ks]

    # phi and f- are seeded proportionally on a line, so w(phi, f-) is pure rounding
    assert max(a for a, _ in conditions) > 1e4
    assert max(b for _, b in conditions) < 1e4
    bs = [coefficients(phi, f_plus, f_minus, k)[1] for k in ks]
    np.testing.assert_allclose(bs, bs[len(bs) // 2], rtol=1e-8)
    with pytest.raises(IllConditioned, match="coefficient a"):
        coefficients(f_minus, f_plus, f_minus, ks[0], max_condition=1e4)


def test_solutions_on_different_lines_do_not_mix(calibration: SpectralProblem) -> None:
    first = propagate(calibration, LatticeLine(0j, 0.01, 0, 10), (1.0, GROWING))
    second = propagate(calibration, LatticeLine(0.001 + 0j, 0.01, 0, 10), (1.0, GROWING))

    with pytest.raises(RangeError):
        wronskian(first, second, 2)
    with pytest.raises(RangeError):
        linear_combination([1.0, 1.0], [first, second])
    with pytest.raises(RangeError):
        wronskian(first, first, 10)


def test_propagate_rejects_bad_lines_and_seeds(calibration: SpectralProblem) -> None:
    problem = make_problem()
    with pytest.raises(OutsideStrip):
        propagate(problem, LatticeLine(0.3 + 0.1j, 0.01, 0, 10), (1.0, 1.0))
    with pytest.raises(PoleOnLattice):
        propagate(problem, LatticeLine(-0.05 + 0j, 0.01, 0, 10), (1.0, 1.0))
    with pytest.raises(ValueError, match="vanish"):
        propagate(calibration, LatticeLine(0j, 0.01, 0, 10), (0.0, 0.0))


def test_calibration_lines_may_cross_the_origin(calibration: SpectralProblem) -> None:
    solution = propagate(calibration, LatticeLine(-0.05 + 0j, 0.01, 0, 10), (1.0, GROWING))

    assert solution.at(10).relative_deviation(LogValue.of(GROWING**10)) < 1e-12


def test_rescaling_respects_the_log_bound() -> None:
    bounded = SpectralProblem(MeromorphicPotential.constant(3.0), Strip(0.35, 0.35), 0j, NumericsSettings(log_bound=10.0))
    line = LatticeLine(-0.3 + 0j, 0.001, 0, 600)

    with pytest.raises(Overflow):
        propagate(bounded, line, _powers(line, GROWING))


def test_line_to_reaches_the_seed_regions() -> None:
    problem = make_problem()
    c = seed_depth(problem)
    z = 0.1 + 0.1j

    forward = line_to(problem, z, 0.01)
    assert forward.k_max == 0
    assert forward.point(0) == z
    assert forward.point(forward.k_min + 1).real <= -c + 1e-12
    assert forward.point(forward.k_min + 2).real > -c

    backward = line_to(problem, z, 0.01, direction=Direction.BACKWARD)
    assert backward.k_min == 0
    assert backward.point(backward.k_max - 1).real >= c - 1e-12

    assert line_to(problem, z, 0.01, steps=40).k_min == -40


def test_spanning_line_covers_both_seed_regions() -> None:
    problem = make_problem()
    c = seed_depth(problem)
    line = spanning_line(problem, 0.1, 0.01)

    assert line.point(line.k_min + 1).real <= -c + 1e-12
    assert line.point(line.k_max - 1).real >= c - 1e-12
    assert all(problem.strip.contains(complex(z)) for z in line.points)


def test_seeds_must_lie_in_the_seed_region(model: AsymptoticModel) -> None:
    with pytest.raises(OutsideSeedRegion):
        seed_wkb(model, LatticeLine(-0.1 + 0.1j, 0.01, 0, 10), 0)
    with pytest.raises(OutsideSeedRegion):
        solve_phi(model, LatticeLine(-0.1 + 0.1j, 0.01, 0, 10))


@pytest.mark.parametrize("z", [0.1 + 0.15j, -0.15 - 0.1j, 0.2 - 0.2j])
def test_lattice_psi_follows_the_uniform_law(model: AsymptoticModel, z: complex) -> None:
    solution = solve_psi(model, line_to(model.problem, z, model.h))

    assert solution.at(0).relative_deviation(model.psi_uniform(z)) < 0.15
    assert solution.provenance.source == "wkb"


def test_lattice_psi_near_rplus(model: AsymptoticModel) -> None:
    z = 0.155 + 0.01j

    solution = solve_psi(model, line_to(model.problem, z, model.h))

    assert solution.at(0).relative_deviation(model.psi_near_rplus(z)) < 0.3


@pytest.mark.parametrize("z", [-0.1 + 0.1j, 0.05 - 0.15j])
def test_lattice_phi_follows_its_uniform_law(model: AsymptoticModel, z: complex) -> None:
    solution = solve_phi(model, line_to(model.problem, z, model.h, direction=Direction.BACKWARD))

    assert solution.provenance.direction is Direction.BACKWARD
    assert solution.at(0).relative_deviation(model.phi_uniform(z)) < 0.15


def test_f_plus_and_f_minus_form_a_basis(model: AsymptoticModel) -> None:
    problem = model.problem
    line = spanning_line(problem, 0.5 * problem.strip.d_y, model.h)
    f_plus = solve_f_plus(model, line)
    f_minus = solve_f_minus(model, line)
    k_center = round(-line.theta.real / model.h)

    assert abs(wronskian(f_plus, f_minus, k_center) - 2j) < 0.2
    assert wronskian_drift(f_plus, f_minus) < 1e-8
    assert recurrence_residual(problem, f_plus) < 1e-12


def test_f_plus_is_psi_rescaled(model: AsymptoticModel) -> None:
    line = line_to(model.problem, 0.1 + 0.1j, model.h)

    psi = solve_psi(model, line)
    f_plus = solve_f_plus(model, line)

    np.testing.assert_allclose(f_plus.logs, psi.logs - model.log_n0)


def test_residue_extrapolation_finds_the_poles_of_f_plus(model: AsymptoticModel) -> None:
    record = residue_extrapolation(model.problem, model, 1, model.h, solution="f_plus")

    assert record.consistent
    assert record.residual < 0.05
    assert len(record.offsets) == 3
    assert math.isfinite(record.limit.log_magnitude)


def test_residue_extrapolation_finds_the_zeros_of_f_minus(model: AsymptoticModel) -> None:
    record = residue_extrapolation(model.problem, model, 1, model.h, solution="f_minus")

    assert record.consistent


def test_residue_extrapolation_argument_checks(model: AsymptoticModel) -> None:
    with pytest.raises(ValueError, match="unknown solution"):
        residue_extrapolation(model.problem, model, 1, model.h, solution="chi")
    with pytest.raises(ValueError, match="model built for"):
        residue_extrapolation(model.problem, model, 1, 0.02)
    with pytest.raises(OutsideStrip):
        residue_extrapolation(model.problem, model, 40, model.h)
    with pytest.raises(OutsideStrip):
        residue_extrapolation(model.problem, model, -1, model.h)

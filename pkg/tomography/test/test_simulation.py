import math

import numpy as np
import pytest

from tomography.fem.assembly import assemble
from tomography.fem.field import Field
from tomography.fem.solver import discrepancy
from tomography.mesh.disk_mesh import generate_disk_mesh
from tomography.models import BoundaryArc, NeumannPattern, PatternKind
from tomography.simulation import simulator
from tomography.simulation.patterns import default_pattern_set, neumann_load, pattern_eval
from tomography.simulation.simulator import angular_resample, discretize, noise_generator, simulate

FULL = BoundaryArc.full_boundary()


@pytest.fixture(scope="module")
def fine_mesh():
    return generate_disk_mesh(0.05)


def test_pattern_on_full_boundary():
    pattern = NeumannPattern(kind=PatternKind.cosine, n=2)
    theta = np.array([0.0, math.pi / 4.0, math.pi / 2.0])
    assert np.allclose(pattern_eval(pattern, theta), [1.0, 0.0, -1.0], atol=1e-15)


def test_pattern_on_partial_arc(half_arc):
    pattern = NeumannPattern(kind=PatternKind.sine, n=1, arc=half_arc)
    theta = np.array([math.pi / 4.0, 3.0 * math.pi / 4.0, 1.5 * math.pi])
    # one whole period stretched over (0, pi), nothing outside
    assert np.allclose(pattern_eval(pattern, theta), [1.0, -1.0, 0.0], atol=1e-15)


def test_partial_arc_cosine_starts_at_one(half_arc):
    pattern = NeumannPattern(kind=PatternKind.cosine, n=3, arc=half_arc)
    assert pattern_eval(pattern, np.array([1e-3]))[0] == pytest.approx(1.0, abs=1e-3)


def test_default_pattern_set(half_arc):
    patterns = default_pattern_set(half_arc)
    assert len(patterns) == 10
    assert [p.label for p in patterns[:5]] == ["cosine1", "cosine2", "cosine3", "cosine4", "cosine5"]
    assert all(p.arc == half_arc for p in patterns)


@pytest.mark.parametrize("arc_text", ["full", "0,pi", "0.25pi,1.5pi"])
def test_loads_are_compatible_and_supported(small_mesh, arc_text):
    arc = BoundaryArc.parse(arc_text)
    outside = small_mesh.boundary_nodes[~arc.contains(small_mesh.boundary_theta)]
    for pattern in default_pattern_set(arc):
        load = neumann_load(small_mesh, pattern)
        assert abs(load.sum()) < 1e-12
        assert np.all(load[small_mesh.interior_mask] == 0.0)
        assert np.all(load[outside] == 0.0)


def test_load_on_empty_arc(coarse_mesh):
    pattern = NeumannPattern(kind=PatternKind.cosine, n=1, arc=BoundaryArc(theta1=0.01, theta2=0.02))
    with pytest.raises(ValueError):
        neumann_load(coarse_mesh, pattern)


def test_noise_streams_are_independent_of_order():
    first = noise_generator(4, 3).normal(size=5)
    noise_generator(4, 0).normal(size=5)
    again = noise_generator(4, 3).normal(size=5)
    assert np.array_equal(first, again)
    assert not np.array_equal(first, noise_generator(4, 2).normal(size=5))


def test_angular_resample_is_periodic():
    theta = np.linspace(0.0, 2.0 * math.pi, 8, endpoint=False)
    values = np.cos(theta)
    target = np.array([2.0 * math.pi - theta[1] / 2.0])
    expected = 0.5 * (values[-1] + values[0])
    assert angular_resample(theta, values, target, FULL)[0] == pytest.approx(expected, rel=1e-12)


def test_angular_resample_copies_identical_angles():
    theta = np.array([0.1, 0.5, 0.9])
    values = np.array([1.0, 2.0, 3.0])
    result = angular_resample(theta, values, theta.copy(), FULL)
    assert np.array_equal(result, values)
    assert result is not values


def test_noise_free_unit_conductivity(fine_mesh, coarse_mesh):
    dataset = simulate(Field.constant(fine_mesh, 1.0), FULL, coarse_mesh, eps=0.0, seed=0)
    assert dataset.size == 10
    assert dataset.noise_std == 0.0
    cosine = dataset.samples[0]
    assert np.allclose(cosine.values, np.cos(cosine.theta), atol=2e-2)
    assert len(cosine.theta) == len(coarse_mesh.boundary_nodes)


def test_samples_are_grounded_on_the_arc(fine_mesh, coarse_mesh, half_arc):
    dataset = simulate(Field.constant(fine_mesh, 1.0), half_arc, coarse_mesh, eps=0.0, seed=0)
    weights = coarse_mesh.boundary_weights[half_arc.contains(coarse_mesh.boundary_theta)]
    for sample in dataset.samples:
        assert len(sample.theta) == len(weights)
        assert abs(weights @ np.asarray(sample.values)) < 1e-12


def test_noise_level(fine_mesh, coarse_mesh):
    sigma = Field.constant(fine_mesh, 1.0)
    clean = simulate(sigma, FULL, coarse_mesh, eps=0.0, seed=3)
    noisy = simulate(sigma, FULL, coarse_mesh, eps=0.01, seed=3)
    peak = max(np.max(np.abs(sample.values)) for sample in clean.samples)
    assert noisy.noise_std == pytest.approx(0.01 * peak, rel=1e-12)

    difference = np.concatenate(
        [np.subtract(n.values, c.values) for n, c in zip(noisy.samples, clean.samples, strict=True)]
    )
    assert np.std(difference) == pytest.approx(noisy.noise_std, rel=0.25)


def test_same_seed_same_data(fine_mesh, coarse_mesh):
    sigma = Field.constant(fine_mesh, 1.0)
    first = simulate(sigma, FULL, coarse_mesh, eps=0.05, seed=11)
    second = simulate(sigma, FULL, coarse_mesh, eps=0.05, seed=11)
    other = simulate(sigma, FULL, coarse_mesh, eps=0.05, seed=12)
    assert first.samples == second.samples
    assert first.samples != other.samples


def test_negative_noise_level(fine_mesh, coarse_mesh):
    with pytest.raises(ValueError):
        simulate(Field.constant(fine_mesh, 1.0), FULL, coarse_mesh, eps=-0.1, seed=0)


def test_inverse_crime_guard(coarse_mesh):
    sigma = Field.constant(coarse_mesh, 1.0)
    with pytest.raises(ValueError):
        simulate(sigma, FULL, coarse_mesh, eps=0.0, seed=0)
    dataset = simulate(sigma, FULL, coarse_mesh, eps=0.0, seed=0, allow_inverse_crime=True)
    assert dataset.size == 10


def test_warns_on_close_mesh_sizes(small_mesh, coarse_mesh, monkeypatch):
    warnings = []
    monkeypatch.setattr(simulator.log, "warning", lambda message, *args: warnings.append(message % args))
    simulate(Field.constant(small_mesh, 1.0), FULL, coarse_mesh, eps=0.0, seed=0)
    assert len(warnings) == 1
    assert "finer" in warnings[0]


def test_discretize_on_sampling_mesh(fine_mesh, coarse_mesh, half_arc):
    dataset = simulate(Field.constant(fine_mesh, 1.0), half_arc, coarse_mesh, eps=0.01, seed=0)
    data = discretize(dataset, coarse_mesh)
    on_arc = data.weights > 0
    assert data.size == 10
    assert np.count_nonzero(on_arc) == len(dataset.samples[0].theta)
    boundary = data.dirichlet[coarse_mesh.boundary_nodes, 0]
    inside = half_arc.contains(coarse_mesh.boundary_theta)
    assert np.array_equal(boundary[inside], dataset.samples[0].values)
    assert np.all(data.dirichlet[~on_arc] == 0.0)


def test_discrepancy_floor_matches_noise(fine_mesh, coarse_mesh):
    sigma = Field.constant(fine_mesh, 1.0)
    clean = discretize(simulate(sigma, FULL, coarse_mesh, eps=0.0, seed=5), coarse_mesh)
    noisy = discretize(simulate(sigma, FULL, coarse_mesh, eps=0.02, seed=5), coarse_mesh)
    system = assemble(coarse_mesh, Field.constant(coarse_mesh, 1.0), FULL)
    assert discrepancy(system, noisy) > discrepancy(system, clean)


def test_full_circle_arc_takes_the_full_boundary_path(fine_mesh, coarse_mesh):
    arc = BoundaryArc.parse("0,2pi")
    assert arc.full
    sigma = Field.constant(fine_mesh, 1.0)
    first = simulate(sigma, arc, coarse_mesh, eps=0.01, seed=9)
    second = simulate(sigma, FULL, coarse_mesh, eps=0.01, seed=9)
    assert first.samples == second.samples
    assert np.array_equal(discretize(first, coarse_mesh).dirichlet, discretize(second, coarse_mesh).dirichlet)

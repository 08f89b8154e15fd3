import numpy as np
import pytest
from pydantic import ValidationError

from tomography.fem.field import Field
from tomography.mesh.disk_mesh import generate_disk_mesh
from tomography.models import BoundaryArc, DiskRegion, PolygonRegion, PriorMask, ReconConfig, UnionRegion
from tomography.simulation.simulator import simulate
from tomography.utils.metrics import metrics, region_mean, support_overlap
from tomography.utils.phantoms import circular_phantom, delta_sigma, kite_phantom, multi_bump_phantom, rasterize
from tomography.utils.priors import alpha_weights, mask_from_field, mask_from_phantom, mu_field
from tomography.utils.sweep import delta_r_sweep


def test_no_prior_is_uniform(small_mesh):
    assert np.all(mu_field(None, small_mesh).values == 1.0)
    assert np.all(mu_field(PriorMask(), small_mesh).values == 1.0)


def test_disk_prior(small_mesh):
    mask = PriorMask(region=DiskRegion(center=(0.3, 0.3), radius=0.25), mu_in=0.01)
    mu = mu_field(mask, small_mesh).values
    distance = np.hypot(small_mesh.nodes[:, 0] - 0.3, small_mesh.nodes[:, 1] - 0.3)
    assert np.all(mu[distance < 0.25] == 0.01)
    assert np.all(mu[distance > 0.26] == 1.0)


def test_dilation_grows_the_region(medium_mesh):
    region = DiskRegion(center=(0.0, 0.2), radius=0.3)
    counts = [
        np.count_nonzero(mu_field(PriorMask(region=region, dilation=dr), medium_mesh).values < 1.0)
        for dr in (-0.25, 0.0, 0.25)
    ]
    assert counts[0] < counts[1] < counts[2]


def test_polygon_dilation_keeps_centroid():
    square = PolygonRegion(vertices=[(0.0, 0.0), (0.2, 0.0), (0.2, 0.2), (0.0, 0.2)])
    grown = square.dilated(1.5)
    assert np.allclose(grown.centroid(), square.centroid())
    assert np.allclose(grown.vertices[0], (-0.05, -0.05))


def test_union_region():
    union = UnionRegion(
        members=[DiskRegion(center=(-0.5, 0.0), radius=0.1), DiskRegion(center=(0.5, 0.0), radius=0.1)]
    )
    points = np.array([[-0.5, 0.0], [0.5, 0.05], [0.0, 0.0]])
    assert union.contains(points).tolist() == [True, True, False]
    assert np.allclose(union.centroid(), [0.0, 0.0])


def test_invalid_dilation():
    with pytest.raises(ValidationError):
        PriorMask(region=DiskRegion(center=(0.0, 0.0), radius=0.2), dilation=-1.0)


def test_invalid_mu():
    with pytest.raises(ValidationError):
        PriorMask(mu_in=0.0)
    with pytest.raises(ValidationError):
        PriorMask(mu_out=2.0)


def test_prior_round_trips_through_json():
    mask = mask_from_phantom(multi_bump_phantom(), dilation=0.1)
    assert isinstance(mask.region, UnionRegion)
    assert PriorMask.model_validate_json(mask.model_dump_json()) == mask


def test_alpha_weights(small_mesh):
    beta = np.full(small_mesh.num_nodes, 0.5)
    weights = alpha_weights(0.1, mu_field(None, small_mesh), beta)
    assert np.allclose(weights, 0.05)
    with pytest.raises(ValueError):
        alpha_weights(0.0, mu_field(None, small_mesh), beta)


def test_mask_from_phantom_shapes():
    assert isinstance(mask_from_phantom(circular_phantom()).region, DiskRegion)
    assert isinstance(mask_from_phantom(kite_phantom()).region, PolygonRegion)


def test_mask_from_field(medium_mesh):
    field = delta_sigma(circular_phantom(), medium_mesh)
    mask = mask_from_field(field, level=0.5)
    assert mask.region.contains(np.array([[0.3, 0.3]])).all()
    assert not mask.region.contains(np.array([[-0.5, -0.5]])).any()


def test_mask_from_flat_field(small_mesh):
    with pytest.raises(ValueError):
        mask_from_field(Field.zeros(small_mesh))


def test_region_mean_of_constant(small_mesh):
    field = Field.constant(small_mesh, 2.5)
    assert region_mean(field) == pytest.approx(2.5)
    assert region_mean(field, DiskRegion(center=(0.0, 0.0), radius=0.5)) == pytest.approx(2.5)


def test_metrics_of_phantom(medium_mesh):
    phantom = circular_phantom()
    support = mask_from_phantom(phantom).region
    sigma_e, sigma_max = metrics(rasterize(phantom, medium_mesh), support)
    assert 3.0 < sigma_e <= 5.0
    assert sigma_max == 5.0


def test_metrics_of_background(small_mesh):
    assert metrics(Field.constant(small_mesh, 1.0)) == pytest.approx((1.0, 1.0))


def test_empty_region(small_mesh):
    with pytest.raises(ValueError):
        region_mean(Field.zeros(small_mesh), DiskRegion(center=(0.0, 0.0), radius=1e-3))


def test_support_overlap(medium_mesh):
    phantom = circular_phantom()
    assert support_overlap(delta_sigma(phantom, medium_mesh), phantom) == pytest.approx(1.0)
    assert support_overlap(Field.zeros(medium_mesh), phantom) == 0.0
    shifted = delta_sigma(kite_phantom(), medium_mesh)
    assert support_overlap(shifted, phantom) < 0.5


def test_delta_r_sweep_keeps_order(coarse_mesh):
    phantom = circular_phantom()
    fine = generate_disk_mesh(0.05)
    full = BoundaryArc.full_boundary()
    dataset = simulate(rasterize(phantom, fine), full, coarse_mesh, eps=0.01, seed=0, phantom=phantom)
    config = ReconConfig(alpha=1e-4, max_iters=3)
    rows = delta_r_sweep(phantom, dataset, coarse_mesh, Field.constant(coarse_mesh, 1.0), config, [0.1, None, -0.1])
    assert [row.delta_r for row in rows] == [0.1, None, -0.1]
    assert all(1 <= row.iterations <= 3 for row in rows)
    assert all(row.sigma_max >= 1.0 for row in rows)

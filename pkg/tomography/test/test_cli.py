import pytest

from tomography import main as cli
from tomography.external_data.files import read_mesh, read_model, read_table_csv, write_field_csv
from tomography.fem.field import Field
from tomography.main import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main
from tomography.models import CauchyDataSet, ReconStatus, RunManifest
from tomography.utils.configuration import configuration
from tomography.utils.errors import NumericalError

MESH_ARGS = ["--fine-h", "0.1", "--coarse-h", "0.3"]


@pytest.fixture(scope="module")
def dataset_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "circular.json"
    args = ["simulate", "--phantom", "circular", "--eps", "0.01", "--seed", "3", "--out", str(path)]
    with pytest.MonkeyPatch.context() as patch:
        patch.setattr(configuration, "MESH_CACHE_ENABLED", False)
        assert main(args + MESH_ARGS) == EXIT_OK
    return path


def test_simulate_outputs(dataset_path):
    dataset = read_model(dataset_path, CauchyDataSet)
    assert dataset.size == 10
    assert dataset.seed == 3
    assert dataset.phantom is not None
    assert dataset_path.with_name("circular.mesh.json").is_file()
    run = read_model(dataset_path.with_name("circular.manifest.json"), RunManifest)
    assert run.command == "simulate"
    assert str(dataset_path) in run.outputs


def test_reconstruct_writes_run_directory(dataset_path, tmp_path):
    out = tmp_path / "run"
    assert main(["reconstruct", str(dataset_path), "--max-iters", "3", "--out", str(out)]) == EXIT_OK
    for name in ("delta_gamma.csv", "sigma.csv", "fields.vtk", "diagnostics.csv", "mesh.json", "phantom.json"):
        assert (out / name).is_file()
    run = read_model(out / "manifest.json", RunManifest)
    assert run.method.value == "sparsity"
    assert run.status in set(ReconStatus)
    assert run.config["recon"]["max_iters"] == 3
    assert str(dataset_path) in run.inputs
    assert 1 <= len(read_table_csv(out / "diagnostics.csv")) <= 3


def test_manifest_rerun_is_identical(dataset_path, tmp_path):
    first = tmp_path / "first"
    second = tmp_path / "second"
    args = ["reconstruct", str(dataset_path), "--max-iters", "4", "--alpha", "1e-4", "--prior", "phantom"]
    assert main(args + ["--out", str(first)]) == EXIT_OK
    assert main(["reconstruct", "--manifest", str(first / "manifest.json"), "--out", str(second)]) == EXIT_OK
    for name in ("delta_gamma.csv", "sigma.csv"):
        assert (first / name).read_bytes() == (second / name).read_bytes()
    rerun = read_model(second / "manifest.json", RunManifest)
    assert rerun.config["recon"]["prior"] is not None


def test_tv_and_report(dataset_path, tmp_path):
    sparse = tmp_path / "sparse"
    tv = tmp_path / "tv"
    assert main(["reconstruct", str(dataset_path), "--max-iters", "3", "--out", str(sparse)]) == EXIT_OK
    assert main(["tv", str(dataset_path), "--max-iters", "3", "--out", str(tv)]) == EXIT_OK
    assert read_model(tv / "manifest.json", RunManifest).method.value == "tv"

    report = tmp_path / "report.csv"
    assert main(["report", str(sparse), str(tv), "--out", str(report)]) == EXIT_OK
    rows = read_table_csv(report)
    assert {row["method"] for row in rows} == {"sparsity", "tv"}
    peaks = [float(row["sigma_max"]) for row in rows]
    assert peaks == sorted(peaks, reverse=True)
    assert min(peaks) >= 1.0
    assert all(row["sigma_E"] != "" for row in rows)


def test_prior_from_tv_run(dataset_path, tmp_path):
    tv = tmp_path / "tv"
    assert main(["tv", str(dataset_path), "--max-iters", "5", "--out", str(tv)]) == EXIT_OK
    out = tmp_path / "informed"
    args = ["reconstruct", str(dataset_path), "--max-iters", "3", "--prior", str(tv), "--out", str(out)]
    assert main(args) == EXIT_OK
    run = read_model(out / "manifest.json", RunManifest)
    assert run.config["recon"]["prior"]["region"]["kind"] == "polygon"
    assert run.config["recon"]["prior"]["mu_in"] == 1e-2
    assert str(tv / "delta_gamma.csv") in run.inputs


def test_prior_from_run_without_positive_values(dataset_path, tmp_path):
    flat = tmp_path / "flat"
    flat.mkdir()
    mesh_path = dataset_path.with_name("circular.mesh.json")
    (flat / "mesh.json").write_bytes(mesh_path.read_bytes())
    mesh = read_mesh(mesh_path)
    write_field_csv(flat / "delta_gamma.csv", Field.zeros(mesh))
    args = ["reconstruct", str(dataset_path), "--prior", str(flat), "--out", str(tmp_path / "run")]
    assert main(args) == EXIT_CONFIG


def test_sweep(dataset_path, tmp_path):
    out = tmp_path / "sweep"
    args = ["sweep-dr", str(dataset_path), "--delta-r", "0", "0.1", "--include-no-prior", "--max-iters", "2"]
    assert main(args + ["--out", str(out)]) == EXIT_OK
    rows = read_table_csv(out / "sweep.csv")
    assert [row["delta_r"] for row in rows] == ["0.0", "0.1", ""]


def test_prior_dilation_without_prior(dataset_path, tmp_path):
    args = ["reconstruct", str(dataset_path), "--delta-r", "0.1", "--out", str(tmp_path / "run")]
    assert main(args) == EXIT_CONFIG


def test_missing_output(dataset_path):
    assert main(["reconstruct", str(dataset_path)]) == EXIT_CONFIG


def test_unknown_phantom(tmp_path):
    args = ["simulate", "--phantom", str(tmp_path / "missing.json"), "--out", str(tmp_path / "d.json")]
    assert main(args + MESH_ARGS) == EXIT_CONFIG


def test_invalid_arc(tmp_path):
    assert main(["simulate", "--arc", "pi,0", "--out", str(tmp_path / "d.json")] + MESH_ARGS) == EXIT_CONFIG


def test_numerical_failure(tmp_path, monkeypatch):
    def failing(*args, **kwargs):
        raise NumericalError("singular")

    monkeypatch.setattr(cli, "simulate", failing)
    assert main(["simulate", "--out", str(tmp_path / "d.json")] + MESH_ARGS) == EXIT_NUMERICAL

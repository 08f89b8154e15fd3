import argparse
import sys
import time
import traceback
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import List, Optional

from tomography.cache import cached_disk_mesh
from tomography.external_data.files import (
    read_field_csv,
    read_mesh,
    read_model,
    sha256_file,
    write_diagnostics_csv,
    write_field_csv,
    write_field_vtk,
    write_mesh,
    write_model,
    write_table_csv,
)
from tomography.fem.field import Field
from tomography.models import (
    BoundaryArc,
    CauchyDataSet,
    PhantomSpec,
    PriorMask,
    ReconConfig,
    ReconMethod,
    ReportRow,
    RunManifest,
    SweepRow,
    TVConfig,
)
from tomography.reconstructors.reconstructor_factory import ReconstructorFactory
from tomography.simulation.simulator import simulate
from tomography.utils.configuration import configuration
from tomography.utils.errors import NumericalError
from tomography.utils.logger import log
from tomography.utils.metrics import metrics, support_overlap
from tomography.utils.phantoms import SHIPPED_PHANTOMS, check_admissible, rasterize
from tomography.utils.priors import mask_from_field, mask_from_phantom
from tomography.utils.sweep import DEFAULT_DELTA_R, delta_r_sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

MANIFEST_FILE = "manifest.json"
DELTA_GAMMA_FILE = "delta_gamma.csv"
SIGMA_FILE = "sigma.csv"
FIELD_VTK_FILE = "fields.vtk"
DIAGNOSTICS_FILE = "diagnostics.csv"
MESH_FILE = "mesh.json"
PHANTOM_FILE = "phantom.json"
SWEEP_FILE = "sweep.csv"


def load_phantom(value: str) -> PhantomSpec:
    """A shipped phantom name or the path of a PhantomSpec JSON file."""
    if value in SHIPPED_PHANTOMS:
        return SHIPPED_PHANTOMS[value]()
    return read_model(value, PhantomSpec)


def dataset_mesh_path(dataset_path: Path) -> Path:
    return dataset_path.with_name(dataset_path.stem + ".mesh.json")


def read_run_field(run_dir: Path) -> Field:
    """delta_gamma of a run directory, on the final mesh of that run."""
    return read_field_csv(run_dir / DELTA_GAMMA_FILE, read_mesh(run_dir / MESH_FILE))


def manifest(command: str, started: float, **kwargs) -> RunManifest:
    return RunManifest(
        tool_version=configuration.PROJECT_VERSION,
        command=command,
        started_at=datetime.fromtimestamp(started, timezone.utc).isoformat(),
        runtime_seconds=time.time() - started,
        **kwargs,
    )


def hash_inputs(*paths: Optional[str]) -> dict:
    return {str(path): sha256_file(path) for path in paths if path and Path(path).is_file()}


def serializable(args: argparse.Namespace) -> dict:
    return {key: value for key, value in vars(args).items() if key != "handler"}


def cmd_simulate(args: argparse.Namespace):
    started = time.time()
    phantom = load_phantom(args.phantom)
    arc = BoundaryArc.parse(args.arc)
    fine = cached_disk_mesh(args.fine_h)
    recon_mesh = cached_disk_mesh(args.coarse_h)
    check_admissible(phantom, fine, args.c)
    dataset = simulate(
        rasterize(phantom, fine),
        arc,
        recon_mesh,
        args.eps,
        args.seed,
        allow_inverse_crime=args.allow_inverse_crime,
        phantom=phantom,
    )

    out = Path(args.out)
    write_model(out, dataset)
    write_mesh(dataset_mesh_path(out), recon_mesh)
    outputs = [str(out), str(dataset_mesh_path(out))]
    run = manifest(
        "simulate",
        started,
        config={"args": serializable(args)},
        inputs=hash_inputs(args.phantom),
        outputs=outputs,
        seed=args.seed,
    )
    write_model(out.with_name(out.stem + ".manifest.json"), run)
    log.info("Dataset with %d patterns written to %s", dataset.size, out)


def resolve_config(args: argparse.Namespace, method: ReconMethod) -> ReconConfig:
    model = TVConfig if method == ReconMethod.tv else ReconConfig
    config = read_model(args.config, model) if args.config else model()
    overrides = {
        key: value
        for key, value in (("alpha", args.alpha), ("max_iters", args.max_iters), ("c", args.c))
        if value is not None
    }
    if args.refine:
        overrides["refinement"] = config.refinement.model_copy(update={"enabled": True}).model_dump()
    return model.model_validate({**config.model_dump(), **overrides})


def resolve_prior(args: argparse.Namespace, dataset: CauchyDataSet, config: ReconConfig) -> Optional[PriorMask]:
    if args.prior == "phantom":
        if dataset.phantom is None:
            raise ValueError("Dataset records no phantom to take the prior support from")
        prior = mask_from_phantom(dataset.phantom)
    elif args.prior and Path(args.prior).is_dir():
        prior = mask_from_field(read_run_field(Path(args.prior)), level=args.prior_level)
        log.info("Prior support thresholded from %s at level %.2f", args.prior, args.prior_level)
    elif args.prior:
        prior = read_model(args.prior, PriorMask)
    else:
        prior = config.prior
    if args.delta_r is not None:
        if prior is None:
            raise ValueError("--delta-r needs a prior")
        prior = PriorMask.model_validate({**prior.model_dump(), "dilation": args.delta_r})
    return prior


def prior_input(prior: Optional[str]) -> Optional[str]:
    if not prior or prior == "phantom":
        return None
    return str(Path(prior) / DELTA_GAMMA_FILE) if Path(prior).is_dir() else prior


def load_reconstruction_inputs(args: argparse.Namespace):
    dataset_path = Path(args.dataset)
    dataset = read_model(dataset_path, CauchyDataSet)
    if args.mesh:
        mesh = read_mesh(args.mesh)
    elif dataset_mesh_path(dataset_path).is_file():
        mesh = read_mesh(dataset_mesh_path(dataset_path))
    elif dataset.recon_mesh_h:
        mesh = cached_disk_mesh(dataset.recon_mesh_h)
    else:
        raise ValueError("No reconstruction mesh: pass --mesh")
    return dataset, mesh, Field.constant(mesh, args.sigma0)


def rerun_arguments(args: argparse.Namespace) -> argparse.Namespace:
    saved = read_model(args.manifest, RunManifest)
    for path, digest in saved.inputs.items():
        if not Path(path).is_file() or sha256_file(path) != digest:
            log.warning("Input %s differs from the one recorded in the manifest", path)
    stored = dict(saved.config["args"])
    stored.update(manifest=None, out=args.out or stored["out"])
    return argparse.Namespace(**stored, handler=args.handler)


def cmd_reconstruct(args: argparse.Namespace):
    if args.manifest:
        args = rerun_arguments(args)
    started = time.time()
    method = ReconMethod(args.method)
    dataset, mesh, sigma0 = load_reconstruction_inputs(args)
    config = resolve_config(args, method)
    config = config.model_copy(update={"prior": resolve_prior(args, dataset, config)})

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reconstructor = ReconstructorFactory(method, dataset, mesh, sigma0, config).get_reconstructor()
    try:
        result = reconstructor.reconstruct()
    except NumericalError as e:
        write_diagnostics_csv(out / DIAGNOSTICS_FILE, e.diagnostics)
        raise

    write_field_csv(out / DELTA_GAMMA_FILE, result.delta_gamma)
    write_field_csv(out / SIGMA_FILE, result.sigma)
    write_field_vtk(out / FIELD_VTK_FILE, {"delta_gamma": result.delta_gamma, "sigma": result.sigma})
    write_diagnostics_csv(out / DIAGNOSTICS_FILE, result.records)
    write_mesh(out / MESH_FILE, result.mesh)
    outputs = [DELTA_GAMMA_FILE, SIGMA_FILE, FIELD_VTK_FILE, DIAGNOSTICS_FILE, MESH_FILE]
    if dataset.phantom is not None:
        write_model(out / PHANTOM_FILE, dataset.phantom)
        outputs.append(PHANTOM_FILE)

    run = manifest(
        method.value,
        started,
        method=method,
        config={"args": serializable(args), "recon": config.model_dump(mode="json")},
        inputs=hash_inputs(args.dataset, args.mesh, args.config, prior_input(args.prior)),
        outputs=outputs,
        seed=dataset.seed,
        status=result.status,
    )
    write_model(out / MANIFEST_FILE, run)
    log.info("Reconstruction written to %s (%s, %d iterations)", out, result.status.value, result.iterations)


def cmd_sweep(args: argparse.Namespace):
    started = time.time()
    dataset, mesh, sigma0 = load_reconstruction_inputs(args)
    phantom = load_phantom(args.phantom) if args.phantom else dataset.phantom
    if phantom is None:
        raise ValueError("The sweep needs a phantom: pass --phantom or use a simulated dataset")
    config = resolve_config(args, ReconMethod.sparsity)
    delta_rs = list(args.delta_r) + ([None] if args.include_no_prior else [])
    rows = delta_r_sweep(phantom, dataset, mesh, sigma0, config, delta_rs)

    out = Path(args.out)
    columns = tuple(SweepRow.model_fields)
    write_table_csv(out / SWEEP_FILE, columns, ([row.model_dump(mode="json")[c] for c in columns] for row in rows))
    run = manifest(
        "sweep-dr",
        started,
        method=ReconMethod.sparsity,
        config={"args": serializable(args), "recon": config.model_dump(mode="json")},
        inputs=hash_inputs(args.dataset, args.mesh, args.config),
        outputs=[SWEEP_FILE],
        seed=dataset.seed,
    )
    write_model(out / MANIFEST_FILE, run)


def report_row(run_dir: Path) -> ReportRow:
    run = read_model(run_dir / MANIFEST_FILE, RunManifest)
    delta_gamma = read_run_field(run_dir)
    sigma = read_field_csv(run_dir / SIGMA_FILE, delta_gamma.mesh)
    sigma_e, overlap = None, None
    if (run_dir / PHANTOM_FILE).is_file():
        phantom = read_model(run_dir / PHANTOM_FILE, PhantomSpec)
        if phantom.inclusions:
            sigma_e, _ = metrics(sigma, mask_from_phantom(phantom).region)
            overlap = support_overlap(delta_gamma, phantom)
    _, sigma_max = metrics(sigma)
    return ReportRow(
        run=str(run_dir),
        method=run.method,
        sigma_E=sigma_e,
        sigma_max=sigma_max,
        support_overlap=overlap,
        runtime_seconds=run.runtime_seconds,
        status=run.status,
    )


def cmd_report(args: argparse.Namespace):
    with ThreadPoolExecutor(max_workers=configuration.WORKER_CONCURRENCY_LIMIT) as executor:
        rows = list(executor.map(report_row, [Path(run_dir) for run_dir in args.runs]))
    rows.sort(key=lambda row: -row.sigma_max)
    columns = tuple(ReportRow.model_fields)
    write_table_csv(args.out, columns, ([row.model_dump(mode="json")[c] for c in columns] for row in rows))
    log.info("Report of %d runs written to %s", len(rows), args.out)


def add_reconstruction_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("dataset", nargs="?", help="Dataset JSON written by simulate")
    parser.add_argument("--mesh", help="Reconstruction mesh JSON; defaults to the mesh stored with the dataset")
    parser.add_argument("--config", help="ReconConfig / TVConfig JSON file")
    parser.add_argument("--alpha", type=float, help="Override the regularization parameter")
    parser.add_argument("--max-iters", type=int, help="Override the iteration limit")
    parser.add_argument("--c", type=float, help="Override the admissibility constant")
    parser.add_argument("--sigma0", type=float, default=1.0, help="Constant background conductivity")
    parser.add_argument("--refine", action="store_true", help="Enable local mesh refinement")
    parser.add_argument("--out", help="Output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tomography", description=configuration.PROJECT_NAME)
    commands = parser.add_subparsers(dest="command", required=True)

    sim = commands.add_parser("simulate", help="Simulate partial Cauchy data for a phantom")
    sim.add_argument("--phantom", default="circular", help=f"One of {sorted(SHIPPED_PHANTOMS)} or a JSON file")
    sim.add_argument("--arc", default="full", help='"full" or "THETA1,THETA2", e.g. "0,pi"')
    sim.add_argument("--eps", type=float, default=1e-2, help="Relative noise level")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--fine-h", type=float, default=0.015, help="Edge length of the simulation mesh")
    sim.add_argument("--coarse-h", type=float, default=0.05, help="Edge length of the reconstruction mesh")
    sim.add_argument("--c", type=float, default=ReconConfig().c, help="Admissibility constant checked on the phantom")
    sim.add_argument("--allow-inverse-crime", action="store_true")
    sim.add_argument("--out", required=True, help="Dataset JSON to write")
    sim.set_defaults(handler=cmd_simulate)

    for name, method in (("reconstruct", ReconMethod.sparsity), ("tv", ReconMethod.tv)):
        rec = commands.add_parser(name, help=f"Reconstruct with the {method.value} method")
        add_reconstruction_arguments(rec)
        rec.add_argument("--method", choices=[m.value for m in ReconMethod], default=method.value)
        rec.add_argument(
            "--prior",
            help='PriorMask JSON, a run directory whose delta_gamma is thresholded, or "phantom" for the exact '
            "support of the dataset phantom",
        )
        rec.add_argument(
            "--prior-level", type=float, default=0.5, help="Threshold for run-directory priors, relative to the peak"
        )
        rec.add_argument("--delta-r", type=float, help="Relative dilation of the prior region")
        rec.add_argument("--manifest", help="Re-run the reconstruction recorded in this manifest")
        rec.set_defaults(handler=cmd_reconstruct)

    sweep = commands.add_parser("sweep-dr", help="Sparsity reconstructions for dilated exact-support priors")
    add_reconstruction_arguments(sweep)
    sweep.add_argument("--phantom", help="Phantom whose support gives the prior; defaults to the dataset phantom")
    sweep.add_argument("--delta-r", type=float, nargs="+", default=list(DEFAULT_DELTA_R))
    sweep.add_argument("--include-no-prior", action="store_true", help="Add a run without prior")
    sweep.set_defaults(handler=cmd_sweep)

    report = commands.add_parser("report", help="Compare reconstruction runs")
    report.add_argument("runs", nargs="+", help="Run directories written by reconstruct or tv")
    report.add_argument("--out", required=True, help="CSV file to write")
    report.set_defaults(handler=cmd_report)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command in ("reconstruct", "tv", "sweep-dr"):
        if not getattr(args, "manifest", None) and (not args.dataset or not args.out):
            log.error("A dataset and --out are required")
            return EXIT_CONFIG
    try:
        args.handler(args)
    except NumericalError as exc:
        log.error(f"Numerical failure in {args.command}: {exc}")
        return EXIT_NUMERICAL
    except (ValueError, FileNotFoundError) as exc:
        log.error(f"Invalid input for {args.command}: {exc}")
        if configuration.DEBUG:
            log.error("".join(traceback.format_tb(exc.__traceback__)))
        return EXIT_CONFIG
    return EXIT_OK


def start():
    """Launched with `poetry run tomography` at root level"""
    sys.exit(main())

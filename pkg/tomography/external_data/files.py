import csv
import hashlib
from pathlib import Path
from typing import Iterable, List, Sequence, Type, TypeVar

import numpy as np
from pydantic import BaseModel

from tomography.fem.field import Field
from tomography.mesh.disk_mesh import Mesh
from tomography.models import IterationRecord, MeshDocument
from tomography.utils.logger import log

Model = TypeVar("Model", bound=BaseModel)

VTK_TRIANGLE = 5


def read_model(path: str | Path, model: Type[Model]) -> Model:
    """
    Parse a JSON file into a pydantic model.

    Raises:
        FileNotFoundError: when the file does not exist.
        pydantic.ValidationError: when the content does not match the model.
    """
    path = Path(path)
    log.debug("Reading %s from %s", model.__name__, path)
    return model.model_validate_json(path.read_text(encoding="utf-8"))


def write_model(path: str | Path, instance: BaseModel):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(instance.model_dump_json(indent=2), encoding="utf-8")


def read_mesh(path: str | Path) -> Mesh:
    return Mesh.from_document(read_model(path, MeshDocument))


def write_mesh(path: str | Path, mesh: Mesh):
    write_model(path, mesh.to_document())


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_table_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            # repr keeps floats round-trippable
            writer.writerow([repr(value) if isinstance(value, float) else value for value in row])


def read_table_csv(path: str | Path) -> List[dict]:
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def write_field_csv(path: str | Path, field: Field):
    write_table_csv(path, ("node_index", "value"), ((j, float(v)) for j, v in enumerate(field.values)))


def read_field_csv(path: str | Path, mesh: Mesh) -> Field:
    rows = read_table_csv(path)
    values = np.zeros(mesh.num_nodes)
    seen = np.zeros(mesh.num_nodes, dtype=bool)
    for row in rows:
        index = int(row["node_index"])
        if not 0 <= index < mesh.num_nodes:
            raise ValueError(f"Node index {index} out of range for {mesh}")
        values[index] = float(row["value"])
        seen[index] = True
    if not seen.all():
        raise ValueError(f"Field file {path} does not cover every mesh node")
    return Field(mesh, values)


def write_field_vtk(path: str | Path, fields: dict[str, Field]):
    """Legacy ASCII VTK unstructured grid with one point scalar per entry of fields."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mesh = next(iter(fields.values())).mesh
    lines = ["# vtk DataFile Version 3.0", "tomography field", "ASCII", "DATASET UNSTRUCTURED_GRID"]
    lines.append(f"POINTS {mesh.num_nodes} double")
    lines += [f"{x!r} {y!r} 0.0" for x, y in mesh.nodes.tolist()]
    lines.append(f"CELLS {mesh.num_triangles} {4 * mesh.num_triangles}")
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles.tolist()]
    lines.append(f"CELL_TYPES {mesh.num_triangles}")
    lines += [str(VTK_TRIANGLE)] * mesh.num_triangles
    lines.append(f"POINT_DATA {mesh.num_nodes}")
    for name, field in fields.items():
        if field.mesh is not mesh:
            raise ValueError("All VTK fields must live on one mesh")
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [repr(v) for v in field.values.tolist()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


DIAGNOSTIC_COLUMNS = tuple(IterationRecord.model_fields)


def write_diagnostics_csv(path: str | Path, records: List[IterationRecord]):
    write_table_csv(path, DIAGNOSTIC_COLUMNS, ([getattr(r, name) for name in DIAGNOSTIC_COLUMNS] for r in records))


def read_diagnostics_csv(path: str | Path) -> List[IterationRecord]:
    return [IterationRecord.model_validate(row) for row in read_table_csv(path)]

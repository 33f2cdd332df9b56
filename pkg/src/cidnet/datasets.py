"""Bundled social networks, their preprocessing rules and summary statistics."""
from __future__ import annotations

import csv
import hashlib
import io
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .graph import Network, density, read_edge_list, reciprocity

ENV_VAR = "CIDNET_DATA_DIR"

DATASET_NAMES = (
    "highschool",
    "karate",
    "oxford",
    "freshmen",
    "dolphins",
    "twitter",
    "enron",
    "students_coop",
    "residence_hall",
    "divorce",
)

# weight predicates applied before weights are dropped
PREPROCESSING = {
    "none": None,
    "flatten": None,
    "keep_weights_1_2_3": lambda w: w in (1, 2, 3),
    "keep_weights_4_5": lambda w: w in (4, 5),
}


class DatasetMissingError(FileNotFoundError):
    pass


class IntegrityError(RuntimeError):
    """A dataset file does not match its manifest entry."""


@dataclass(frozen=True)
class SummaryStats:
    nodes: int
    edges: int
    density: float
    reciprocity: float

    def formatted(self) -> tuple[int, int, str, str]:
        return self.nodes, self.edges, f"{self.density:.3f}", f"{self.reciprocity:.3f}"

    def matches(self, other: "SummaryStats") -> bool:
        """Equal node and edge counts, density and reciprocity to 3 decimals."""
        return self.formatted() == other.formatted()


@dataclass(frozen=True)
class DatasetDescriptor:
    name: str
    directed: bool
    preprocessing: str
    sha256: str | None
    expected: SummaryStats


def default_data_dir() -> Path:
    env = os.environ.get(ENV_VAR)
    if env:
        return Path(env)
    return Path(str(resources.files("cidnet") / "data"))


def _parse_manifest(text: str) -> dict[str, DatasetDescriptor]:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    out = {}
    for row in csv.DictReader(io.StringIO("\n".join(lines))):
        out[row["name"]] = DatasetDescriptor(
            name=row["name"],
            directed=row["directed"].strip().lower() == "true",
            preprocessing=row["preprocessing"],
            sha256=None if row["sha256"] in ("", "-") else row["sha256"],
            expected=SummaryStats(
                nodes=int(row["nodes"]),
                edges=int(row["edges"]),
                density=float(row["density"]),
                reciprocity=float(row["reciprocity"]),
            ),
        )
    return out


def load_manifest(data_dir: str | Path | None = None) -> dict[str, DatasetDescriptor]:
    """Descriptors from ``<data_dir>/manifest.txt``, falling back to the
    packaged manifest when an override directory has none."""
    data_dir = Path(data_dir) if data_dir is not None else default_data_dir()
    path = data_dir / "manifest.txt"
    if not path.exists():
        path = Path(str(resources.files("cidnet") / "data" / "manifest.txt"))
    return _parse_manifest(path.read_text(encoding="utf-8"))


def dataset_paths(name: str, data_dir: str | Path | None = None) -> tuple[Path, Path]:
    data_dir = Path(data_dir) if data_dir is not None else default_data_dir()
    return data_dir / name / "edges.csv", data_dir / name / "nodes.txt"


def summary_stats(net: Network) -> SummaryStats:
    return SummaryStats(net.n, net.edge_count(), density(net), reciprocity(net))


def load_bundled(name: str, data_dir: str | Path | None = None, verify: bool = True) -> Network:
    """Load a named dataset, apply its preprocessing and check it.

    Raises :class:`DatasetMissingError` naming the expected path when the edge
    file is absent and :class:`IntegrityError` on checksum or statistics
    mismatch.
    """
    manifest = load_manifest(data_dir)
    if name not in manifest:
        raise KeyError(f"unknown dataset {name!r}; known: {', '.join(sorted(manifest))}")
    desc = manifest[name]
    edges_path, nodes_path = dataset_paths(name, data_dir)
    if not edges_path.exists():
        raise DatasetMissingError(
            f"dataset {name!r} not found: expected edge list at {edges_path} "
            f"(set {ENV_VAR} to a directory containing {name}/edges.csv)"
        )
    raw = edges_path.read_bytes()
    if verify and desc.sha256 is not None:
        digest = hashlib.sha256(raw).hexdigest()
        if digest != desc.sha256:
            raise IntegrityError(f"{edges_path}: sha256 {digest} does not match manifest {desc.sha256}")
    net = read_edge_list(
        edges_path,
        directed=desc.directed,
        nodes_path=nodes_path if nodes_path.exists() else None,
        weight_filter=PREPROCESSING[desc.preprocessing],
    )
    if verify:
        got = summary_stats(net)
        if not got.matches(desc.expected):
            raise IntegrityError(f"{name}: computed stats {got.formatted()} != expected {desc.expected.formatted()}")
    return net


def available_datasets(data_dir: str | Path | None = None) -> list[str]:
    return [name for name in load_manifest(data_dir) if dataset_paths(name, data_dir)[0].exists()]


def half_weight_index(together: float, only_a: float, only_b: float) -> float:
    """Association strength X / (X + (Ya + Yb) / 2)."""
    if min(together, only_a, only_b) < 0:
        raise ValueError("counts must be non-negative")
    denom = together + 0.5 * (only_a + only_b)
    if denom <= 0:
        raise ValueError("half-weight index is undefined when all counts are zero")
    return together / denom

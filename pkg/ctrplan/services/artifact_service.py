"""Run artifacts: versioned CSV tables, self-contained SVG plots and the run manifest."""
import csv
import hashlib
import io
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import numpy as np  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402
from pydantic import BaseModel  # noqa: E402

from ctrplan import __version__  # noqa: E402
from ctrplan.config import settings  # noqa: E402
from ctrplan.schemas import ArtifactEntry, RunManifest  # noqa: E402

logger = logging.getLogger(__name__)

CSV_SCHEMA_LINE = "# schema=v1"
MANIFEST_NAME = "manifest.json"


def format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


class ArtifactStore:
    """One output directory per run; every file written through it lands in the manifest."""

    def __init__(
        self,
        out_dir: Optional[Path],
        command: str,
        argv: Sequence[str],
        seed: int,
        scenario: Optional[str] = None,
        scenario_hash: Optional[str] = None,
        deterministic: Optional[bool] = None,
    ):
        self.out_dir = Path(out_dir or settings.OUTPUT_DIR)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        if deterministic is None:
            deterministic = settings.DETERMINISTIC_ARTIFACTS
        self.deterministic = deterministic
        self.manifest = RunManifest(
            command=command,
            argv=list(argv),
            seed=seed,
            scenario=scenario,
            scenario_hash=scenario_hash,
            tool_version=__version__,
        )

    def _write_bytes(self, name: str, content: bytes) -> Path:
        if name == MANIFEST_NAME:
            raise ValueError(f"'{MANIFEST_NAME}' is reserved")
        path = self.out_dir / name
        path.write_bytes(content)
        checksum = hashlib.sha256(content).hexdigest()
        self.manifest.artifacts = [a for a in self.manifest.artifacts if a.name != name]
        self.manifest.artifacts.append(
            ArtifactEntry(name=name, sha256=checksum, bytes=len(content))
        )
        logger.debug(f"Wrote {path} ({len(content)} bytes)")
        return path

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
        buffer = io.StringIO()
        buffer.write(CSV_SCHEMA_LINE + "\n")
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
        return self._write_bytes(name, buffer.getvalue().encode("utf-8"))

    def write_json(self, name: str, document: BaseModel) -> Path:
        return self._write_bytes(name, (document.model_dump_json(indent=2) + "\n").encode("utf-8"))

    def write_svg(self, name: str, figure: Figure) -> Path:
        buffer = io.BytesIO()
        metadata = {"Date": None} if self.deterministic else None
        rc = {"svg.hashsalt": "ctrplan" if self.deterministic else None, "svg.fonttype": "path"}
        with matplotlib.rc_context(rc):
            figure.savefig(buffer, format="svg", metadata=metadata)
        return self._write_bytes(name, buffer.getvalue())

    def finalize(self) -> Path:
        """Write manifest.json listing every artifact of the run."""
        self.manifest.artifacts.sort(key=lambda a: a.name)
        path = self.out_dir / MANIFEST_NAME
        path.write_text(self.manifest.model_dump_json(indent=2) + "\n")
        logger.info(f"Wrote {len(self.manifest.artifacts)} artifacts to {self.out_dir}")
        return path


def verify_manifest(out_dir: Path) -> List[str]:
    """Names of artifacts whose content no longer matches the manifest."""
    manifest = RunManifest.model_validate_json((Path(out_dir) / MANIFEST_NAME).read_text())
    mismatched = []
    for entry in manifest.artifacts:
        path = Path(out_dir) / entry.name
        if not path.is_file() or hashlib.sha256(path.read_bytes()).hexdigest() != entry.sha256:
            mismatched.append(entry.name)
    return mismatched


def read_csv(path: Path) -> List[List[str]]:
    """Rows of an artifact CSV, header included, schema line stripped."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != CSV_SCHEMA_LINE:
        raise ValueError(f"{path} is not a versioned artifact CSV")
    return list(csv.reader(lines[1:]))


# Plots
def scatter_figure(
    groups: Sequence[np.ndarray],
    labels: Sequence[str],
    axis_labels: Sequence[str] = ("x", "y"),
    title: str = "",
) -> Figure:
    figure = Figure(figsize=(5, 5))
    ax = figure.add_subplot()
    for points, label in zip(groups, labels):
        points = np.atleast_2d(points)
        ys = points[:, 1] if points.shape[1] > 1 else np.zeros(points.shape[0])
        ax.scatter(points[:, 0], ys, s=4, alpha=0.5, label=label)
    ax.set_xlabel(axis_labels[0])
    ax.set_ylabel(axis_labels[1])
    ax.set_title(title)
    ax.legend(loc="best")
    ax.set_aspect("equal", adjustable="datalim")
    return figure


def trajectory_figure(
    times: Sequence[float],
    series: Sequence[Sequence[float]],
    labels: Sequence[str],
    title: str = "",
) -> Figure:
    figure = Figure(figsize=(6, 4))
    ax = figure.add_subplot()
    for values, label in zip(series, labels):
        ax.plot(times, values, label=label)
    ax.set_xlabel("step")
    ax.set_title(title)
    ax.legend(loc="best")
    return figure


def heatmap_figure(
    xs: np.ndarray, ys: np.ndarray, values: np.ndarray, label: str, title: str = ""
) -> Figure:
    figure = Figure(figsize=(5, 4))
    ax = figure.add_subplot()
    mesh = ax.pcolormesh(xs, ys, np.ma.masked_invalid(values), shading="auto")
    figure.colorbar(mesh, ax=ax, label=label)
    ax.set_aspect("equal", adjustable="box")
    ax.set_title(title)
    return figure


def graph_figure(positions: np.ndarray, edges: Sequence[tuple], title: str = "") -> Figure:
    figure = Figure(figsize=(5, 5))
    ax = figure.add_subplot()
    for a, b in edges:
        ax.annotate(
            "", xy=positions[b], xytext=positions[a], arrowprops={"arrowstyle": "->", "alpha": 0.5}
        )
    ax.scatter(positions[:, 0], positions[:, 1], zorder=3)
    for i, p in enumerate(positions):
        ax.annotate(str(i), p, textcoords="offset points", xytext=(4, 4))
    ax.set_title(title)
    ax.set_aspect("equal", adjustable="datalim")
    return figure

import json

import numpy as np
import pytest

from ctrplan.services.artifact_service import (
    CSV_SCHEMA_LINE,
    MANIFEST_NAME,
    ArtifactStore,
    format_value,
    read_csv,
    scatter_figure,
    verify_manifest,
)
from ctrplan.utils.rng import make_rng


def _store(out_dir, **kwargs):
    return ArtifactStore(out_dir, command="test", argv=["test"], seed=0, **kwargs)


class TestCsv:
    def test_schema_line_and_rows(self, out_dir):
        rows = [[0, 0.5], [1, np.float64(0.25)]]
        path = _store(out_dir).write_csv("trace.csv", ["t", "q0"], rows)
        assert path.read_text().splitlines()[0] == CSV_SCHEMA_LINE
        assert read_csv(path) == [["t", "q0"], ["0", "0.5"], ["1", "0.25"]]

    def test_unversioned_file_is_rejected(self, out_dir):
        path = out_dir / "plain.csv"
        path.write_text("t,q0\n")
        with pytest.raises(ValueError):
            read_csv(path)

    def test_format_value(self):
        assert format_value(True) == "1"
        assert format_value(np.int64(3)) == "3"
        assert format_value(0.1) == "0.1"
        assert format_value("sticking") == "sticking"


class TestManifest:
    def test_lists_every_artifact(self, out_dir):
        store = _store(out_dir, scenario="pusher1d", scenario_hash="abc")
        store.write_csv("b.csv", ["x"], [[1]])
        store.write_csv("a.csv", ["x"], [[2]])
        manifest = json.loads(store.finalize().read_text())
        assert [a["name"] for a in manifest["artifacts"]] == ["a.csv", "b.csv"]
        assert manifest["scenario"] == "pusher1d"
        assert verify_manifest(out_dir) == []

    def test_detects_tampering(self, out_dir):
        store = _store(out_dir)
        path = store.write_csv("a.csv", ["x"], [[1]])
        store.finalize()
        path.write_text("changed\n")
        assert verify_manifest(out_dir) == ["a.csv"]

    def test_rewrite_replaces_entry(self, out_dir):
        store = _store(out_dir)
        store.write_csv("a.csv", ["x"], [[1]])
        store.write_csv("a.csv", ["x"], [[2]])
        assert len(store.manifest.artifacts) == 1

    def test_reserved_name(self, out_dir):
        with pytest.raises(ValueError):
            _store(out_dir).write_csv(MANIFEST_NAME, ["x"], [])


def test_svg_is_deterministic(tmp_path):
    points = make_rng(0).standard_normal((50, 2))
    contents = []
    for run in ("first", "second"):
        store = _store(tmp_path / run, deterministic=True)
        path = store.write_svg("scatter.svg", scatter_figure([points], ["samples"]))
        contents.append(path.read_bytes())
    assert contents[0] == contents[1]
    assert contents[0].lstrip().startswith(b"<?xml")


def test_rng_streams_are_independent():
    a = make_rng(5, 1).random(4)
    np.testing.assert_array_equal(a, make_rng(5, 1).random(4))
    assert not np.array_equal(a, make_rng(5, 2).random(4))

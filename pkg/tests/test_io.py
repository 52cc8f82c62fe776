import numpy as np
import pytest

from scanbench.core import (
    Dataset,
    DatasetFormatError,
    Fixation,
    MissingSaliencyError,
    PriorityMap,
    Scanpath,
    in_bounds,
    uniform_map,
)
from scanbench.io import (
    ConstantSaliency,
    SaliencyStore,
    load_dataset,
    read_smap,
    save_dataset,
    write_saliency_dir,
    write_smap,
)
from scanbench.metrics import (
    FixationScore,
    read_scores_csv,
    write_scores_csv,
)
from util import make_meta, random_dataset


class TestDatasetRoundTrip:
    def test_rewrites_identically(self, tmp_path):
        # Coordinates already at 6 decimal places survive the decimal
        # text format exactly.
        ds = random_dataset(3, n_images=2, n_subjects=2, n_fixations=4)
        rounded = Dataset(
            ds.name,
            ds.stimuli,
            tuple(
                Scanpath(
                    sp.image_id,
                    sp.subject_id,
                    tuple(
                        Fixation(
                            round(f.x_px, 6), round(f.y_px, 6), f.duration_ms
                        )
                        for f in sp.fixations
                    ),
                    sp.forced_initial,
                )
                for sp in ds.scanpaths
            ),
        )
        path = tmp_path / "ds.jsonl"
        save_dataset(rounded, path)
        back = load_dataset(path)
        assert back.stimuli == rounded.stimuli
        assert back.scanpaths == rounded.scanpaths
        assert back.name == "ds"

    def test_name_override(self, tmp_path):
        ds = random_dataset(0, n_images=1, n_subjects=1)
        path = tmp_path / "x.jsonl"
        save_dataset(ds, path)
        assert load_dataset(path, name="other").name == "other"

    def test_missing_duration_round_trips_as_null(self, tmp_path):
        meta = make_meta("im")
        sp = Scanpath("im", "s", (Fixation(1.0, 2.0), Fixation(3.0, 4.0, 120.0)))
        path = tmp_path / "d.jsonl"
        save_dataset(Dataset("d", {"im": meta}, (sp,)), path)
        text = path.read_text()
        assert '"duration_ms":null' in text
        back = load_dataset(path)
        assert back.scanpaths[0].fixations[0].duration_ms is None
        assert back.scanpaths[0].fixations[1].duration_ms == 120.0

    def test_invalid_flag_round_trips(self, tmp_path):
        meta = make_meta("im")
        sp = Scanpath("im", "s", (Fixation(1.0, 2.0, invalid=True),))
        path = tmp_path / "d.jsonl"
        save_dataset(Dataset("d", {"im": meta}, (sp,)), path)
        assert '"invalid":true' in path.read_text()
        assert load_dataset(path).scanpaths[0].fixations[0].invalid

    def test_six_decimal_serialization(self, tmp_path):
        meta = make_meta("im")
        sp = Scanpath("im", "s", (Fixation(12.3456789, 0.1),))
        path = tmp_path / "d.jsonl"
        save_dataset(Dataset("d", {"im": meta}, (sp,)), path)
        assert '"x":12.345679,"y":0.100000' in path.read_text()


def _write_lines(tmp_path, lines):
    path = tmp_path / "bad.jsonl"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


_GOOD = (
    '{"image_id":"im","subject_id":"s","width_px":100,"height_px":50,'
    '"px_per_dva":10.0,"fixations":[{"x":1.0,"y":2.0,"duration_ms":null}],'
    '"forced_initial":false}'
)


class TestLoadErrors:
    def test_reports_failing_line_number(self, tmp_path):
        path = _write_lines(tmp_path, [_GOOD, "{not json"])
        with pytest.raises(DatasetFormatError, match="line 2"):
            load_dataset(path)

    def test_blank_lines_are_skipped(self, tmp_path):
        path = _write_lines(tmp_path, [_GOOD, "", _GOOD])
        assert len(load_dataset(path).scanpaths) == 2

    def test_non_object_record(self, tmp_path):
        path = _write_lines(tmp_path, ["[1, 2]"])
        with pytest.raises(DatasetFormatError, match="line 1"):
            load_dataset(path)

    def test_missing_subject(self, tmp_path):
        bad = _GOOD.replace('"subject_id":"s",', "")
        path = _write_lines(tmp_path, [bad])
        with pytest.raises(DatasetFormatError, match="subject_id"):
            load_dataset(path)

    def test_non_numeric_coordinate(self, tmp_path):
        bad = _GOOD.replace('"x":1.0', '"x":"left"')
        path = _write_lines(tmp_path, [bad])
        with pytest.raises(DatasetFormatError, match="'x' must be a number"):
            load_dataset(path)

    def test_empty_fixations(self, tmp_path):
        bad = _GOOD.replace(
            '"fixations":[{"x":1.0,"y":2.0,"duration_ms":null}]',
            '"fixations":[]',
        )
        path = _write_lines(tmp_path, [bad])
        with pytest.raises(DatasetFormatError, match="non-empty list"):
            load_dataset(path)

    def test_conflicting_stimulus_dimensions(self, tmp_path):
        other = _GOOD.replace('"width_px":100', '"width_px":200')
        path = _write_lines(tmp_path, [_GOOD, other])
        with pytest.raises(DatasetFormatError, match="line 2.*conflicts"):
            load_dataset(path)

    def test_negative_duration(self, tmp_path):
        bad = _GOOD.replace('"duration_ms":null', '"duration_ms":-5')
        path = _write_lines(tmp_path, [bad])
        with pytest.raises(DatasetFormatError, match="negative duration"):
            load_dataset(path)


class TestBoundsPolicies:
    def _path_with_fix(self, tmp_path, x, y, extra_fix=None):
        fixes = [f'{{"x":{x},"y":{y},"duration_ms":null}}']
        if extra_fix:
            fixes.append(extra_fix)
        line = (
            '{"image_id":"im","subject_id":"s","width_px":100,"height_px":50,'
            f'"px_per_dva":10.0,"fixations":[{",".join(fixes)}],'
            '"forced_initial":false}'
        )
        return _write_lines(tmp_path, [line])

    def test_reject_raises_for_later_fixations(self, tmp_path):
        path = self._path_with_fix(
            tmp_path, 1.0, 2.0, '{"x":150.0,"y":2.0,"duration_ms":null}'
        )
        with pytest.raises(DatasetFormatError, match="outside"):
            load_dataset(path, bounds="reject")

    def test_reject_marks_initial_invalid(self, tmp_path):
        path = self._path_with_fix(tmp_path, 150.0, 2.0)
        ds = load_dataset(path, bounds="reject")
        first = ds.scanpaths[0].fixations[0]
        assert first.invalid
        assert first.x_px == 150.0

    def test_clamp_moves_inside(self, tmp_path):
        path = self._path_with_fix(
            tmp_path, -3.0, 60.0, '{"x":100.0,"y":2.0,"duration_ms":null}'
        )
        ds = load_dataset(path, bounds="clamp")
        meta = ds.stimuli["im"]
        for fix in ds.scanpaths[0].fixations:
            assert in_bounds(fix, meta)
        assert ds.scanpaths[0].fixations[0].x_px == 0.0
        assert ds.scanpaths[0].fixations[1].x_px < 100.0

    def test_unknown_policy(self, tmp_path):
        path = self._path_with_fix(tmp_path, 1.0, 2.0)
        with pytest.raises(ValueError):
            load_dataset(path, bounds="wrap")


class TestSmap:
    def test_probability_round_trip_restores_unit_mass(self, tmp_path):
        rng = np.random.default_rng(5)
        values = rng.random((7, 9))
        pmap = PriorityMap(values / values.sum(), "probability")
        path = tmp_path / "m.smap"
        write_smap(path, pmap)
        back = read_smap(path)
        assert back.kind == "probability"
        assert back.values.shape == (7, 9)
        # float32 round trip, then renormalized back to exact unit mass
        assert abs(back.values.sum() - 1.0) < 1e-9
        assert np.allclose(back.values, pmap.values, rtol=1e-6)

    def test_priority_round_trip_keeps_float32_values(self, tmp_path):
        values = np.array([[1.5, -2.25], [0.0, 8.0]])
        pmap = PriorityMap(values, "priority")
        path = tmp_path / "m.smap"
        write_smap(path, pmap)
        back = read_smap(path)
        assert back.kind == "priority"
        # these values are exactly representable in float32
        assert np.array_equal(back.values, values)

    def test_downsample_tag(self, tmp_path):
        pmap = uniform_map((4, 4), downsample=1)
        path = tmp_path / "m.smap"
        write_smap(path, pmap)
        assert read_smap(path, downsample=8).downsample_factor == 8

    def test_header_layout(self, tmp_path):
        pmap = uniform_map((2, 3))
        path = tmp_path / "m.smap"
        write_smap(path, pmap)
        blob = path.read_bytes()
        assert blob[:4] == b"SMAP"
        assert blob[4] == 1  # version
        assert blob[5] == 1  # probability kind
        assert int.from_bytes(blob[6:10], "little") == 3  # width
        assert int.from_bytes(blob[10:14], "little") == 2  # height
        assert len(blob) == 14 + 6 * 4

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "m.smap"
        path.write_bytes(b"XXXX" + bytes(20))
        with pytest.raises(DatasetFormatError, match="not an SMAP"):
            read_smap(path)

    def test_bad_version(self, tmp_path):
        pmap = uniform_map((2, 2))
        path = tmp_path / "m.smap"
        write_smap(path, pmap)
        blob = bytearray(path.read_bytes())
        blob[4] = 9
        path.write_bytes(bytes(blob))
        with pytest.raises(DatasetFormatError, match="version"):
            read_smap(path)

    def test_truncated_payload(self, tmp_path):
        pmap = uniform_map((2, 2))
        path = tmp_path / "m.smap"
        write_smap(path, pmap)
        path.write_bytes(path.read_bytes()[:-4])
        with pytest.raises(DatasetFormatError):
            read_smap(path)


class TestSaliencyStore:
    def test_resamples_and_caches(self, tmp_path):
        rng = np.random.default_rng(0)
        values = rng.random((10, 10)) + 0.1
        pmap = PriorityMap(values / values.sum(), "probability")
        write_saliency_dir(tmp_path, [("im", pmap)])
        store = SaliencyStore(tmp_path)
        meta = make_meta("im", width=40, height=40)
        grid = store.grid_for(meta, 2)
        assert grid.shape == (20, 20)
        assert store.grid_for(meta, 2) is grid

    def test_missing_map(self, tmp_path):
        store = SaliencyStore(tmp_path)
        with pytest.raises(MissingSaliencyError):
            store.grid_for(make_meta("absent"), 1)

    def test_constant_saliency(self):
        grid = ConstantSaliency().grid_for(make_meta(width=20, height=10), 5)
        assert grid.shape == (2, 4)
        assert np.allclose(grid, 1.0 / 8)


class TestScoresCsv:
    def test_round_trip_preserves_floats_exactly(self, tmp_path):
        awkward = [0.1 + 0.2, 1.0 / 3.0, 2.0 ** -32, -17.25]
        scores = [
            FixationScore("im", "s", 0, i + 1, "ll", v)
            for i, v in enumerate(awkward)
        ]
        path = tmp_path / "scores.csv"
        write_scores_csv(scores, path)
        back = read_scores_csv(path)
        assert back == scores
        assert [s.value for s in back] == awkward

    def test_header_validated(self, tmp_path):
        path = tmp_path / "scores.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ValueError, match="header"):
            read_scores_csv(path)

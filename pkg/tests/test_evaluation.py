import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import synth
from spectrack.evaluation import (
    PRECISION_THRESHOLDS,
    SUCCESS_THRESHOLDS,
    SequenceFormatError,
    center_location_error,
    evaluate,
    load_image,
    load_sequence,
    overlap_ratio,
    parse_rect_line,
    precision_at,
    precision_curve,
    read_boxes_file,
    success_auc,
    success_curve,
    write_boxes_file,
    write_result_csv,
    write_result_json,
    write_run_summary,
)
from spectrack.tracker import BoundingBox

boxes_strategy = st.builds(
    BoundingBox,
    x=st.floats(-50, 50),
    y=st.floats(-50, 50),
    w=st.floats(1, 80),
    h=st.floats(1, 80),
)


@pytest.fixture
def sequence_dir(tmp_path):
    frames, boxes = synth.static_sequence(n_frames=3, frame_shape=(48, 64), position=(10, 8))
    root = tmp_path / "toy"
    synth.write_sequence_dir(root, frames, boxes)
    return root, frames, boxes


class TestLoadSequence:
    def test_well_formed_fixture(self, sequence_dir):
        root, frames, boxes = sequence_dir
        seq = load_sequence(root)
        assert seq.name == "toy"
        assert len(seq.frame_paths) == 3
        assert len(seq.ground_truth) == 3
        img = load_image(seq.frame_paths[0])
        np.testing.assert_array_equal(img, frames[0])
        assert seq.ground_truth[0] == boxes[0]

    def test_one_based_conversion(self):
        box = parse_rect_line("10,20,30,40")
        assert (box.x, box.y, box.w, box.h) == (9.0, 19.0, 30.0, 40.0)

    def test_separator_variants(self):
        for line in ("10,20,30,40", "10\t20\t30\t40", "10 20 30 40", "10, 20, 30, 40"):
            box = parse_rect_line(line)
            assert (box.x, box.y) == (9.0, 19.0)

    def test_nan_lines_become_none(self):
        assert parse_rect_line("NaN,NaN,NaN,NaN") is None

    def test_count_mismatch_names_both_counts(self, sequence_dir):
        root, _, _ = sequence_dir
        (root / "groundtruth_rect.txt").write_text("1,1,5,5\n2,2,5,5\n")
        with pytest.raises(SequenceFormatError, match="3 frames but 2"):
            load_sequence(root)

    def test_bad_line_reported_with_line_number(self, sequence_dir):
        root, _, _ = sequence_dir
        (root / "groundtruth_rect.txt").write_text("1,1,5,5\n1,1,5\n1,1,5,5\n")
        with pytest.raises(SequenceFormatError, match=":2"):
            load_sequence(root)

    def test_missing_ground_truth(self, sequence_dir):
        root, _, _ = sequence_dir
        (root / "groundtruth_rect.txt").unlink()
        with pytest.raises(SequenceFormatError, match="ground-truth"):
            load_sequence(root)

    def test_missing_images(self, tmp_path):
        (tmp_path / "groundtruth_rect.txt").write_text("1,1,5,5\n")
        with pytest.raises(SequenceFormatError, match="image"):
            load_sequence(tmp_path)

    def test_other_raster_formats(self, tmp_path):
        from PIL import Image

        rng = np.random.default_rng(0)
        gray = rng.integers(0, 255, (12, 16), dtype=np.uint8)
        color = rng.integers(0, 255, (12, 16, 3), dtype=np.uint8)
        pgm = tmp_path / "a.pgm"
        bmp = tmp_path / "b.bmp"
        Image.fromarray(gray).save(pgm)
        Image.fromarray(color).save(bmp)
        np.testing.assert_array_equal(load_image(pgm), gray)
        np.testing.assert_array_equal(load_image(bmp), color)


class TestCenterLocationError:
    def test_identical_boxes(self):
        b = BoundingBox(3, 4, 10, 12)
        assert center_location_error(b, b) == 0.0

    def test_three_four_five(self):
        a = BoundingBox(0, 0, 10, 10)
        b = BoundingBox(3, 4, 10, 10)
        assert center_location_error(a, b) == 5.0

    def test_exactly_at_threshold(self):
        a = BoundingBox.from_center(0, 0, 5, 5)
        b = BoundingBox.from_center(20, 0, 5, 5)
        assert center_location_error(a, b) == 20.0
        assert precision_at([center_location_error(a, b)], 20.0) == 1.0

    @given(a=boxes_strategy, b=boxes_strategy)
    @settings(max_examples=50, deadline=None)
    def test_symmetry(self, a, b):
        assert center_location_error(a, b) == center_location_error(b, a)


class TestOverlapRatio:
    def test_identical_boxes(self):
        b = BoundingBox(3, 4, 10, 12)
        assert overlap_ratio(b, b) == 1.0

    def test_disjoint_boxes(self):
        assert overlap_ratio(BoundingBox(0, 0, 5, 5), BoundingBox(10, 10, 5, 5)) == 0.0

    def test_one_third_case(self):
        a = BoundingBox(0, 0, 10, 10)
        b = BoundingBox(5, 0, 10, 10)
        assert overlap_ratio(a, b) == pytest.approx(1.0 / 3.0)

    @given(a=boxes_strategy, b=boxes_strategy)
    @settings(max_examples=100, deadline=None)
    def test_symmetry_and_bounds(self, a, b):
        r = overlap_ratio(a, b)
        assert r == overlap_ratio(b, a)
        assert 0.0 <= r <= 1.0

    @given(a=boxes_strategy, b=boxes_strategy, s=st.floats(0.01, 100))
    @settings(max_examples=50, deadline=None)
    def test_scale_invariance(self, a, b, s):
        scaled_a = BoundingBox(a.x * s, a.y * s, a.w * s, a.h * s)
        scaled_b = BoundingBox(b.x * s, b.y * s, b.w * s, b.h * s)
        assert overlap_ratio(scaled_a, scaled_b) == pytest.approx(
            overlap_ratio(a, b), abs=1e-12
        )


class TestCurves:
    def test_precision_fixture(self):
        assert precision_at([5.0, 15.0, 25.0, 100.0], 20.0) == 0.5

    def test_all_zero_cles(self):
        curve = precision_curve([0.0, 0.0, 0.0])
        np.testing.assert_array_equal(curve, 1.0)

    def test_zero_threshold_with_positive_cles(self):
        assert precision_at([0.5, 3.0], 0.0) == 0.0

    def test_precision_grid_has_51_points(self):
        assert len(PRECISION_THRESHOLDS) == 51
        assert precision_curve([1.0]).shape == (51,)

    def test_success_all_ones(self):
        curve = success_curve([1.0, 1.0])
        np.testing.assert_array_equal(curve[:-1], 1.0)
        assert curve[-1] == 0.0  # strict inequality at threshold 1.0
        assert success_auc([1.0, 1.0]) == pytest.approx(20.0 / 21.0)

    def test_success_all_zero(self):
        assert success_auc([0.0, 0.0, 0.0]) == 0.0

    def test_success_half_and_half(self):
        curve = success_curve([1.0, 0.0])
        np.testing.assert_array_equal(curve[:-1], 0.5)
        assert curve[-1] == 0.0
        assert success_auc([1.0, 0.0]) == pytest.approx(10.0 / 21.0)

    def test_success_grid_has_21_points(self):
        assert len(SUCCESS_THRESHOLDS) == 21
        np.testing.assert_allclose(np.diff(SUCCESS_THRESHOLDS), 0.05)

    def test_empty_inputs_rejected(self):
        with pytest.raises(ValueError):
            precision_curve([])
        with pytest.raises(ValueError):
            success_curve([])

    @given(st.lists(st.floats(0, 100), min_size=1, max_size=30))
    @settings(max_examples=50, deadline=None)
    def test_precision_curve_monotone_non_decreasing(self, cles):
        curve = precision_curve(cles)
        assert np.all(np.diff(curve) >= 0)

    @given(st.lists(st.floats(0, 1), min_size=1, max_size=30))
    @settings(max_examples=50, deadline=None)
    def test_success_curve_monotone_non_increasing(self, overlaps):
        curve = success_curve(overlaps)
        assert np.all(np.diff(curve) <= 0)


class TestEvaluate:
    def test_perfect_tracker(self, sequence_dir):
        root, _, boxes = sequence_dir
        seq = load_sequence(root)
        result = evaluate(list(boxes), seq)
        assert result.precision_at_20 == 1.0
        assert result.success_auc == pytest.approx(20.0 / 21.0)
        assert result.per_frame_cle == [0.0, 0.0, 0.0]
        assert result.n_excluded == 0

    def test_constant_far_output(self, sequence_dir):
        root, _, _ = sequence_dir
        seq = load_sequence(root)
        far = [BoundingBox(1.0, 1.0, 2.0, 2.0)] * 3
        result = evaluate(far, seq)
        assert result.precision_at_20 == 0.0
        assert result.success_auc == 0.0

    def test_single_frame_sequence(self, tmp_path):
        frames, boxes = synth.static_sequence(n_frames=1, frame_shape=(48, 64), position=(10, 8))
        root = tmp_path / "one"
        synth.write_sequence_dir(root, frames, boxes)
        seq = load_sequence(root)
        result = evaluate([boxes[0]], seq)
        assert result.per_frame_cle == [0.0]
        assert result.n_frames == 1

    def test_count_mismatch(self, sequence_dir):
        root, _, boxes = sequence_dir
        seq = load_sequence(root)
        with pytest.raises(ValueError, match="2.*3|3.*2"):
            evaluate(list(boxes[:2]), seq)

    def test_nan_ground_truth_excluded(self, sequence_dir):
        root, _, boxes = sequence_dir
        gt = (root / "groundtruth_rect.txt").read_text().splitlines()
        gt[1] = "NaN,NaN,NaN,NaN"
        (root / "groundtruth_rect.txt").write_text("\n".join(gt) + "\n")
        seq = load_sequence(root)
        result = evaluate(list(boxes), seq)
        assert result.n_excluded == 1
        assert math.isnan(result.per_frame_cle[1])
        assert result.precision_at_20 == 1.0


class TestWriters:
    def test_boxes_round_trip(self, tmp_path):
        boxes = [BoundingBox(9.0, 19.25, 30.0, 40.5), BoundingBox(0.0, 0.0, 1.0, 1.0)]
        path = tmp_path / "boxes.txt"
        write_boxes_file(boxes, path)
        again = read_boxes_file(path)
        assert again == boxes
        first = path.read_text().splitlines()[0]
        assert first == "10.0,20.25,30.0,40.5"  # written 1-based

    def test_empty_boxes_file_rejected(self, tmp_path):
        path = tmp_path / "boxes.txt"
        path.write_text("\n")
        with pytest.raises(SequenceFormatError):
            read_boxes_file(path)

    def test_json_and_csv(self, tmp_path, sequence_dir):
        root, _, boxes = sequence_dir
        result = evaluate(list(boxes), load_sequence(root))
        jpath, cpath = tmp_path / "r.json", tmp_path / "r.csv"
        write_result_json(result, jpath, name="toy")
        write_result_csv(result, cpath)
        payload = json.loads(jpath.read_text())
        assert payload["sequence"] == "toy"
        assert len(payload["precision_values"]) == 51
        assert len(payload["success_values"]) == 21
        rows = cpath.read_text().splitlines()
        assert rows[0] == "frame,cle,overlap"
        assert len(rows) == 1 + 3

    def test_run_summary(self, tmp_path, sequence_dir):
        root, _, boxes = sequence_dir
        result = evaluate(list(boxes), load_sequence(root))
        path = tmp_path / "summary.json"
        write_run_summary({"toy": result, "toy2": result}, path)
        payload = json.loads(path.read_text())
        assert payload["n_sequences"] == 2
        assert payload["mean_precision_at_20"] == 1.0
        assert set(payload["sequences"]) == {"toy", "toy2"}

import json
import math

import numpy as np
import pytest

from trigrasp import counters
from trigrasp.dataset import (
    AnnotationError,
    CornellError,
    ImageAnnotation,
    LabelMaps,
    RegionAnnotation,
    SplitSpec,
    apply_object_map,
    label_maps_from_array,
    load_object_map,
    load_region_annotations,
    load_split,
    make_split,
    parse_cornell_rects,
    rasterize,
    read_label_gmap,
    save_object_map,
    save_region_annotations,
    save_split,
    serialize_cornell_rects,
    write_label_gmap,
)
from trigrasp.geometry import ConvexPolygon, area
from trigrasp.grasp import TAU, AngleCodec, RectGrasp
from trigrasp.synth import synth_fixture


def box(x0, y0, x1, y1):
    return ConvexPolygon([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])


def one_region_ann(polygon, angles, omega, size, image_id="img", object_id="obj"):
    region = RegionAnnotation(polygon=polygon, angles=angles, omega=omega)
    return ImageAnnotation(image_id, object_id, (region,), size)


class TestCornell:
    def test_axis_aligned_quad(self):
        rects = parse_cornell_rects("0 0\n4 0\n4 2\n0 2\n")
        assert rects == [RectGrasp(2, 1, 4, 2, 0.0)]

    def test_corner_order_invariance(self):
        # opposite starting corner and reversed traversal give the same grasp
        base = parse_cornell_rects("0 0\n4 0\n4 2\n0 2\n")[0]
        shifted = parse_cornell_rects("4 2\n0 2\n0 0\n4 0\n")[0]
        reversed_ = parse_cornell_rects("0 2\n4 2\n4 0\n0 0\n")[0]
        assert shifted == base and reversed_ == base

    def test_square_canonicalization(self):
        starts = [
            "0 0\n4 0\n4 4\n0 4\n",
            "4 0\n4 4\n0 4\n0 0\n",
            "4 4\n0 4\n0 0\n4 0\n",
            "0 4\n0 0\n4 0\n4 4\n",
        ]
        rects = {parse_cornell_rects(s)[0] for s in starts}
        assert len(rects) == 1

    def test_eight_lines_two_rects(self):
        text = "0 0\n4 0\n4 2\n0 2\n10 10\n14 10\n14 12\n10 12\n"
        assert len(parse_cornell_rects(text)) == 2

    def test_nan_group_skipped_and_counted(self):
        text = "0 0\nNaN NaN\n4 2\n0 2\n0 0\n4 0\n4 2\n0 2\n"
        rects = parse_cornell_rects(text)
        assert len(rects) == 1
        assert counters.count("cornell_nan_group") == 1

    def test_malformed_line(self):
        with pytest.raises(CornellError, match="line 2"):
            parse_cornell_rects("0 0\n1 2 3\n")

    def test_wrong_line_count(self):
        with pytest.raises(CornellError, match="multiple of 4"):
            parse_cornell_rects("0 0\n1 1\n2 2\n")

    def test_round_trip(self, rng):
        rects = [
            RectGrasp(cx=rng.uniform(50, 300), cy=rng.uniform(50, 300),
                      w=rng.uniform(10, 100), h=rng.uniform(10, 80),
                      phi=rng.uniform(0, math.pi))
            for _ in range(50)
        ]
        back = parse_cornell_rects(serialize_cornell_rects(rects))
        assert len(back) == len(rects)
        for a, b in zip(rects, back):
            assert abs(a.cx - b.cx) < 1e-6 and abs(a.cy - b.cy) < 1e-6
            assert abs(a.w - b.w) < 1e-6 and abs(a.h - b.h) < 1e-6
            assert min(abs(a.phi - b.phi), math.pi - abs(a.phi - b.phi)) < 1e-6


class TestRegionAnnotations:
    def test_minimal_file(self, tmp_path):
        payload = {
            "image_id": "a", "object_id": "o", "size": [16, 16],
            "regions": [{"polygon": [[2, 2], [10, 2], [10, 10], [2, 10]],
                         "angles": [0.0], "omega": 60.0}],
        }
        path = tmp_path / "ann.json"
        path.write_text(json.dumps(payload))
        anns = load_region_annotations(path)
        assert len(anns) == 1 and len(anns[0].regions) == 1
        assert anns[0].regions[0].angles == (0.0,)

    def test_any_angles(self, tmp_path):
        payload = {
            "image_id": "a", "size": [16, 16],
            "regions": [{"polygon": [[2, 2], [10, 2], [10, 10], [2, 10]],
                         "angles": "any", "omega": 10.0}],
        }
        path = tmp_path / "ann.json"
        path.write_text(json.dumps(payload))
        anns = load_region_annotations(path)
        assert anns[0].regions[0].angles is None

    def test_omega_bound_rejected(self, tmp_path):
        payload = {
            "image_id": "a", "size": [16, 16],
            "regions": [{"polygon": [[2, 2], [10, 2], [10, 10], [2, 10]],
                         "angles": [0.0], "omega": 200.0}],
        }
        path = tmp_path / "ann.json"
        path.write_text(json.dumps(payload))
        with pytest.raises(AnnotationError, match="omega"):
            load_region_annotations(path)

    def test_out_of_bounds_polygon_rejected(self):
        with pytest.raises(AnnotationError, match="bounds"):
            one_region_ann(box(-1, 0, 8, 8), (0.0,), 10.0, (16, 16))

    def test_angle_out_of_range_rejected(self):
        with pytest.raises(AnnotationError, match="angle"):
            RegionAnnotation(box(0, 0, 4, 4), (TAU,), 10.0)

    def test_empty_angles_rejected(self):
        with pytest.raises(AnnotationError, match="angles"):
            RegionAnnotation(box(0, 0, 4, 4), (), 10.0)

    def test_duplicate_image_ids_rejected(self, tmp_path):
        payload = [
            {"image_id": "a", "size": [8, 8], "regions": []},
            {"image_id": "a", "size": [8, 8], "regions": []},
        ]
        path = tmp_path / "ann.json"
        path.write_text(json.dumps(payload))
        with pytest.raises(AnnotationError, match="duplicate"):
            load_region_annotations(path)

    def test_diagnostics_name_the_region(self, tmp_path):
        payload = {
            "image_id": "imgX", "size": [16, 16],
            "regions": [{"polygon": [[2, 2], [10, 2], [10, 10], [2, 10]],
                         "angles": [0.0]}],
        }
        path = tmp_path / "ann.json"
        path.write_text(json.dumps(payload))
        with pytest.raises(AnnotationError, match="imgX region 0"):
            load_region_annotations(path)

    def test_save_load_round_trip(self, tmp_path):
        _, anns = synth_fixture(6, (64, 64), seed=5)
        path = tmp_path / "ann.json"
        save_region_annotations(path, anns)
        back = load_region_annotations(path)
        assert [a.image_id for a in back] == [a.image_id for a in anns]
        for a, b in zip(anns, back):
            assert a.object_id == b.object_id
            for ra, rb in zip(a.regions, b.regions):
                assert np.allclose(ra.polygon.vertices, rb.polygon.vertices)
                assert ra.angles == rb.angles
                assert ra.omega == rb.omega

    def test_object_map_round_trip(self, tmp_path):
        _, anns = synth_fixture(4, (64, 64), seed=5)
        path = tmp_path / "objects.csv"
        save_object_map(path, anns)
        mapping = load_object_map(path)
        assert mapping == {a.image_id: a.object_id for a in anns}
        renamed = apply_object_map(anns, {anns[0].image_id: "other"})
        assert renamed[0].object_id == "other"
        assert renamed[1].object_id == anns[1].object_id

    def test_object_map_requires_header(self, tmp_path):
        path = tmp_path / "objects.csv"
        path.write_text("a,b\n")
        with pytest.raises(AnnotationError, match="header"):
            load_object_map(path)


class TestRasterize:
    def test_full_image_region(self):
        ann = one_region_ann(box(0, 0, 4, 4), (0.0,), 75.0, (4, 4))
        maps = rasterize(ann, AngleCodec(8))
        assert (maps.confidence == 1).all()
        assert (maps.angle[0] == 1).all() and (maps.angle[1:] == 0).all()
        assert (maps.width == 0.5).all()

    def test_empty_annotation(self):
        maps = rasterize(ImageAnnotation("e", "o", (), (4, 4)), AngleCodec(4))
        assert (maps.to_array() == 0).all()

    def test_two_by_two_square_hits_four_centers(self):
        # centers (1.5, 1.5) .. (2.5, 2.5) are strictly inside [1,3]^2
        ann = one_region_ann(box(1, 1, 3, 3), (0.0,), 60.0, (6, 6))
        maps = rasterize(ann, AngleCodec(4))
        assert np.argwhere(maps.confidence == 1).tolist() == [[1, 1], [1, 2], [2, 1], [2, 2]]

    def test_boundary_pixels_excluded(self):
        # region edge passes exactly through the center row (1.5, *)
        ann = one_region_ann(box(0, 1.5, 4, 3.5), (0.0,), 10.0, (4, 4))
        maps = rasterize(ann, AngleCodec(4))
        assert maps.confidence[1].sum() == 0  # centers at y=1.5 on the edge
        assert maps.confidence[2].sum() == 4

    def test_overlap_unions_bins_max_width(self):
        r1 = RegionAnnotation(box(0, 0, 4, 4), (0.0,), 30.0)
        r2 = RegionAnnotation(box(0, 0, 4, 4), (math.pi,), 90.0)
        ann = ImageAnnotation("o", "o", (r1, r2), (4, 4))
        maps = rasterize(ann, AngleCodec(4))
        assert (maps.angle[0] == 1).all() and (maps.angle[2] == 1).all()
        assert (maps.width == np.float32(0.6)).all()
        flipped = ImageAnnotation("o", "o", (r2, r1), (4, 4))
        again = rasterize(flipped, AngleCodec(4))
        assert (again.to_array() == maps.to_array()).all()

    def test_invariants_random_suite(self, rng):
        codec = AngleCodec(12)
        for case in range(1000):
            cx, cy = rng.uniform(6, 26, size=2)
            w, h = rng.uniform(2, 10, size=2)
            angles = None if case % 5 == 0 else tuple(
                rng.uniform(0, TAU, size=rng.integers(1, 4)))
            ann = one_region_ann(
                box(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2),
                angles, float(rng.uniform(0, 150)), (32, 32))
            maps = rasterize(ann, codec)
            maps.check_invariants()

    def test_pixel_count_tracks_area(self, rng):
        from trigrasp.grasp import oriented_box

        for case in range(100):
            if case % 2 == 0:
                x0, y0 = rng.uniform(1, 20, size=2)
                w, h = rng.uniform(2, 40, size=2)
                poly = box(x0, y0, min(x0 + w, 63.0), min(y0 + h, 63.0))
                w_eff = poly.vertices[:, 0].max() - poly.vertices[:, 0].min()
                h_eff = poly.vertices[:, 1].max() - poly.vertices[:, 1].min()
            else:
                w_eff, h_eff = rng.uniform(4, 30, size=2)
                poly = oriented_box(32.0, 32.0, w_eff, h_eff,
                                    rng.uniform(0, math.pi))
            ann = one_region_ann(poly, (0.0,), 10.0, (64, 64))
            count = int(rasterize(ann, AngleCodec(4)).confidence.sum())
            perimeter = 2 * (w_eff + h_eff)
            assert abs(count - area(poly)) <= perimeter + 4

    def test_gmap_round_trip(self, tmp_path):
        _, anns = synth_fixture(2, (48, 48), seed=1)
        maps = rasterize(anns[0], AngleCodec(36))
        path = tmp_path / "l.gmap"
        write_label_gmap(path, maps)
        back = read_label_gmap(path)
        assert (back.to_array() == maps.to_array()).all()
        assert back.codec == maps.codec

    def test_label_maps_shape_validation(self):
        with pytest.raises(ValueError):
            LabelMaps(np.zeros((4, 4), np.float32), np.zeros((3, 4, 4), np.float32),
                      np.zeros((4, 4), np.float32), AngleCodec(4))
        with pytest.raises(ValueError):
            label_maps_from_array(np.zeros((5, 4, 4), np.float32), AngleCodec(4))


class TestSplits:
    def _anns(self, n, objects):
        return [
            ImageAnnotation(f"im{i:04d}", f"obj{i % objects:03d}", (), (8, 8))
            for i in range(n)
        ]

    def test_cornell_sized_split(self):
        train, test = make_split(self._anns(885, 200), SplitSpec())
        assert len(train) == 664 and len(test) == 221
        assert set(train) | set(test) == {f"im{i:04d}" for i in range(885)}
        assert not set(train) & set(test)

    def test_deterministic(self):
        anns = self._anns(100, 10)
        assert make_split(anns, SplitSpec(seed=5)) == make_split(anns, SplitSpec(seed=5))
        assert make_split(anns, SplitSpec(seed=5)) != make_split(anns, SplitSpec(seed=6))

    def test_single_object_goes_whole(self):
        anns = self._anns(4, 1)
        train, test = make_split(anns, SplitSpec(mode="object-wise"))
        assert (len(train), len(test)) in ((4, 0), (0, 4))

    def test_object_wise_never_leaks(self):
        anns = self._anns(120, 13)
        members = {}
        for a in anns:
            members.setdefault(a.object_id, set()).add(a.image_id)
        for seed in range(30):
            train, test = make_split(anns, SplitSpec(mode="object-wise", seed=seed))
            train_set = set(train)
            for ids in members.values():
                assert ids <= train_set or not (ids & train_set)

    def test_object_wise_requires_ids(self):
        anns = [ImageAnnotation("a", None, (), (8, 8))]
        with pytest.raises(ValueError, match="object_id"):
            make_split(anns, SplitSpec(mode="object-wise"))

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError):
            make_split([], SplitSpec())

    def test_bad_spec(self):
        with pytest.raises(ValueError):
            SplitSpec(mode="sideways")
        with pytest.raises(ValueError):
            SplitSpec(train_fraction=1.5)

    def test_split_file_round_trip(self, tmp_path):
        anns = self._anns(20, 4)
        spec = SplitSpec(seed=3)
        train, test = make_split(anns, spec)
        path = tmp_path / "split.json"
        save_split(path, spec, train, test)
        back = load_split(path)
        assert back["train"] == train and back["test"] == test
        assert back["mode"] == "image-wise"

    def test_split_file_needs_test_ids(self, tmp_path):
        path = tmp_path / "split.json"
        path.write_text(json.dumps({"train": []}))
        with pytest.raises(AnnotationError):
            load_split(path)


class TestSynthFixture:
    def test_deterministic(self):
        images_a, anns_a = synth_fixture(8, (64, 64), seed=7)
        images_b, anns_b = synth_fixture(8, (64, 64), seed=7)
        for a, b in zip(images_a, images_b):
            assert (a == b).all()
        for a, b in zip(anns_a, anns_b):
            assert np.allclose(a.regions[0].polygon.vertices,
                               b.regions[0].polygon.vertices)

    def test_bars_have_opposite_perpendicular_angles(self):
        _, anns = synth_fixture(8, (96, 96), seed=2)
        bars = [a for a in anns if a.object_id.startswith("bar")]
        assert bars
        for ann in bars:
            region = ann.regions[0]
            a1, a2 = sorted(region.angles)
            assert abs(a2 - a1) == pytest.approx(math.pi, abs=1e-9)

    def test_discs_are_any_angle(self):
        _, anns = synth_fixture(8, (96, 96), seed=2)
        discs = [a for a in anns if a.object_id.startswith("disc")]
        assert discs
        for ann in discs:
            assert ann.regions[0].angles is None

    def test_annotations_pass_invariants(self):
        _, anns = synth_fixture(12, (96, 96), seed=9)
        codec = AngleCodec(36)
        for ann in anns:
            rasterize(ann, codec).check_invariants()

    def test_objects_shared_across_image_pairs(self):
        _, anns = synth_fixture(8, (96, 96), seed=4)
        assert anns[0].object_id == anns[1].object_id
        assert anns[0].object_id != anns[2].object_id

    def test_count_validation(self):
        with pytest.raises(ValueError):
            synth_fixture(0, (64, 64), seed=1)

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aileen.percept import (
    BACKGROUND,
    PRESETS,
    ColorModel,
    Crop,
    accuracy,
    calibrate_weights,
    crop_clusters,
    generate_corpus,
    kmeans,
    perceive_color,
    pixel_color_fn,
    rasterize,
    read_corpus,
    read_ppm,
    render_crop,
    score,
    score_and_name,
    two_heuristic_fixture,
    write_corpus,
    write_ppm,
)
from aileen.world import COLOR_PERCEPTS, reset_scene, snapshot


def _isolated(color="red", shape="cylinder", noise=10, seed=0):
    return rasterize([(shape, PRESETS[color], 0.0, 0.0, 0.035)], 0, noise, seed)


def test_isolated_crop_majority_is_preset():
    crop, labels = _isolated()
    obj = crop.pixels[labels == 0].astype(int)
    assert np.abs(obj - PRESETS["red"]).max() <= 10
    assert (labels == 0).mean() > 0.4
    assert perceive_color(crop) == "CVRed"


def test_zero_noise_exact_preset():
    crop, labels = _isolated(noise=0)
    assert (crop.pixels[labels == 0] == PRESETS["red"]).all()
    assert (crop.pixels[labels == -1] == BACKGROUND).all()


def test_intruding_neighbor_labels():
    objs = [("ball", PRESETS["red"], 0.0, 0.0, 0.035), ("box", PRESETS["green"], 0.07, 0.07, 0.035)]
    crop, labels = rasterize(objs, 0, 0)
    assert set(np.unique(labels)) == {-1, 0, 1}
    assert (crop.pixels[labels == 1] == PRESETS["green"]).all()


def test_render_crop_from_world():
    s = reset_scene([("cylinder", "red", (0.0, 0.0)), ("box", "green", (0.075, 0.075))])
    assert perceive_color(render_crop(s, "o1")) == "CVRed"
    assert render_crop(s, "o1", 3).pixels.tobytes() == render_crop(s, "o1", 3).pixels.tobytes()
    with pytest.raises(ValueError):
        render_crop(s, "o7")


def test_pixel_color_fn_matches_ground_truth():
    s = reset_scene([("cylinder", "red"), ("box", "green"), ("ball", "purple")], 2)
    assert snapshot(s, pixel_color_fn(s)) == snapshot(s)


def test_kmeans_two_populations_pure():
    rng = np.random.default_rng(0)
    a = np.array(PRESETS["red"]) + rng.integers(-8, 9, size=(50, 3))
    b = np.array(PRESETS["blue"]) + rng.integers(-8, 9, size=(70, 3))
    clusters = kmeans(np.vstack([a, b]), 2)
    members = sorted((set(c.members.tolist()) for c in clusters), key=len)
    assert members == [set(range(50)), set(range(50, 120))]


def test_kmeans_uniform_single_cluster():
    (c,) = kmeans(np.tile(PRESETS["blue"], (30, 1)), 4)
    assert c.ratio == 1.0
    crop = Crop(np.tile(np.array(PRESETS["blue"], dtype=np.uint8), (20, 20, 1)))
    for w1 in (0.0, 0.3, 1.0):
        assert perceive_color(crop, ColorModel(w1, 1 - w1)) == "CVBlue"


def test_kmeans_three_populations_k4():
    pixels = np.vstack([np.tile(PRESETS[c], (n, 1)) for c, n in (("red", 10), ("green", 20), ("blue", 30))])
    clusters = kmeans(pixels, 4)
    assert len(clusters) == 3
    assert sum(c.ratio for c in clusters) == pytest.approx(1.0)


def test_kmeans_deterministic():
    crop = generate_corpus(1, 4)[0][0]
    a, b = crop_clusters(crop, rng_seed=9), crop_clusters(crop, rng_seed=9)
    assert [c.mean_rgb for c in a] == [c.mean_rgb for c in b]


def test_two_heuristics_pull_apart():
    crop = two_heuristic_fixture()
    clusters = crop_clusters(crop)
    by_name = {ColorModel().name(c.mean_rgb): c for c in clusters}
    assert by_name["green"].ratio > by_name["red"].ratio
    assert by_name["red"].center_distance < by_name["green"].center_distance
    assert score_and_name(clusters, crop, ColorModel(1.0, 0.0)) == "CVGreen"
    assert score_and_name(clusters, crop, ColorModel(0.0, 1.0)) == "CVRed"


def test_color_model_validation():
    with pytest.raises(ValueError):
        ColorModel(0.7, 0.7)
    with pytest.raises(ValueError):
        score_and_name([])


def test_calibration_forced_optimum():
    fixtures = [(two_heuristic_fixture(60 + 2 * i, noise=5), "red") for i in range(20)]
    assert calibrate_weights(fixtures) == (0.0, 1.0)


def test_calibration_agreeing_fixtures_tie_break():
    fixtures = [(_isolated(c, s, seed=i)[0], c) for i, (c, s) in
                enumerate([(c, s) for c in PRESETS for s in ("box", "ball", "cone", "cylinder")])]
    assert calibrate_weights(fixtures)[0] == 0.0


def test_calibration_needs_twenty():
    with pytest.raises(ValueError):
        calibrate_weights(generate_corpus(19, 0))


def test_calibrated_beats_even_weights():
    fixtures = generate_corpus(100, 0)
    w1, w2 = calibrate_weights(fixtures)
    test = generate_corpus(200, 1)
    assert accuracy(test, ColorModel(w1, w2)) >= accuracy(test, ColorModel()) - 1e-12
    assert accuracy(fixtures, ColorModel(w1, w2)) >= accuracy(fixtures, ColorModel())


def test_end_to_end_accuracy():
    fixtures = generate_corpus(500, 11)
    w1, w2 = calibrate_weights(generate_corpus(100, 10))
    assert accuracy(fixtures, ColorModel(w1, w2)) >= 0.99


def test_ppm_round_trip(tmp_path):
    crop = generate_corpus(1, 2)[0][0]
    write_ppm(tmp_path / "a.ppm", crop)
    assert np.array_equal(read_ppm(tmp_path / "a.ppm").pixels, crop.pixels)
    (tmp_path / "b.ppm").write_bytes(b"P6\n# comment\n2 1\n255\n" + bytes(range(6)))
    assert read_ppm(tmp_path / "b.ppm").pixels.tolist() == [[[0, 1, 2], [3, 4, 5]]]
    (tmp_path / "c.ppm").write_bytes(b"P3\n1 1\n255\n0 0 0\n")
    with pytest.raises(ValueError):
        read_ppm(tmp_path / "c.ppm")


def test_corpus_dump(tmp_path):
    manifest = write_corpus(tmp_path, 5, 3)
    back = read_corpus(manifest)
    orig = generate_corpus(5, 3)
    assert [c for _, c in back] == [c for _, c in orig]
    assert all(np.array_equal(a.pixels, b.pixels) for (a, _), (b, _) in zip(back, orig))
    assert manifest.read_text().splitlines()[0] == f"crop0000.ppm {orig[0][1]}"


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.01, 100.0))
def test_score_bounds_and_rescaling(seed, factor):
    crop = generate_corpus(1, seed)[0][0]
    clusters = crop_clusters(crop)
    for w1 in (0.0, 0.25, 0.5, 1.0):
        m = ColorModel(w1, 1 - w1)
        scores = [score(c, m) for c in clusters]
        assert all(0.0 <= s <= 1.0 for s in scores)
        scaled = [factor * (m.w1 * c.ratio + m.w2 * (1 - c.center_distance)) for c in clusters]
        assert int(np.argmax(scores)) == int(np.argmax(scaled))
    assert sum(c.ratio for c in clusters) == pytest.approx(1.0)
    assert all(0 < c.ratio <= 1 and c.center_distance >= 0 for c in clusters)


def test_preset_table():
    assert set(PRESETS) == set(COLOR_PERCEPTS)
    assert len({tuple(v) for v in PRESETS.values()}) == 5

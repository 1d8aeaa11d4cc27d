import numpy as np
import pytest

from models.baseModel import DegenerateInputError, ModelFileError, PnmError
from models.detectionModel import Kind
from models.imageModel import BBox, BinaryImage, GrayImage, RgbImage
from models.knnModel import FACE, NONFACE, KnnModel
from services import amfm, detect, imgcore, phantoms


def gray(width, height, value=255.0):
    return GrayImage(np.full((height, width), value))


@pytest.mark.parametrize("width, starts", [(60, [0]), (120, [0, 30, 60]), (100, [0, 30, 40])])
def test_extract_blocks_positions(width, starts):
    blocks = detect.extract_blocks(gray(width, 60))
    assert [box.x0 for box, _ in blocks] == starts
    assert all(block.shape == (60, 60) for _, block in blocks)


def test_extract_blocks_raster_order():
    boxes = [box for box, _ in detect.extract_blocks(gray(90, 90))]
    assert [(b.y0, b.x0) for b in boxes] == [(0, 0), (0, 30), (30, 0), (30, 30)]


def test_extract_blocks_needs_one_block():
    with pytest.raises(DegenerateInputError):
        detect.extract_blocks(gray(59, 80))


def small_model(features, labels, k=3):
    features = np.asarray(features, dtype=np.uint8)
    return KnnModel(k=k, block_shape=(1, features.shape[1]), features=features, labels=tuple(labels))


def test_knn_exact_match():
    model = small_model([[5, 5], [5, 5], [5, 5], [200, 200]], [FACE, FACE, FACE, NONFACE])
    assert detect.knn_classify(model, np.array([[5, 5]])) == (FACE, 1.0)


def test_knn_majority():
    model = small_model([[0, 0], [1, 0], [2, 0], [90, 90]], [FACE, FACE, NONFACE, NONFACE])
    label, fraction = detect.knn_classify(model, np.array([[0, 0]]))
    assert label == FACE
    assert fraction == pytest.approx(2 / 3)


def knn_oracle(features, labels, query, k):
    ranked = sorted((float(np.sum((f.astype(float) - query) ** 2)), i) for i, f in enumerate(features))
    votes = [labels[i] for _, i in ranked[:k]]
    faces = votes.count(FACE)
    return (FACE, faces / k) if faces * 2 > k else (NONFACE, (k - faces) / k)


def test_knn_matches_full_sort_oracle(rng):
    features = rng.integers(0, 4, size=(20, 6))
    labels = [FACE if x else NONFACE for x in rng.integers(0, 2, size=20)]
    models = {k: small_model(features, labels, k) for k in (1, 3, 5)}
    for _ in range(100):
        query = rng.integers(0, 4, size=(1, 6))
        for k, model in models.items():
            assert detect.knn_classify(model, query) == knn_oracle(features, labels, query[0], k)


def test_knn_dimension_mismatch():
    model = small_model([[1, 2]] * 3, [FACE] * 3)
    with pytest.raises(ValueError):
        detect.knn_classify(model, np.zeros((1, 3)))


def write_manifest(tmp_path, rows):
    for name, value, _ in rows:
        imgcore.save_pnm(gray(60, 60, value), tmp_path / name)
    manifest = tmp_path / "manifest.txt"
    manifest.write_text("# blocks\n" + "".join(f"{name},{label}\n" for name, _, label in rows))
    return str(manifest)


def test_train_save_load(tmp_path, rng):
    manifest = write_manifest(tmp_path, [("a.pgm", 10, "face"), ("b.pgm", 200, "nonface"), ("c.pgm", 20, "face")])
    model = detect.train_knn(manifest, k=3)
    assert model.k == 3
    assert model.n_samples == 3
    assert model.labels == (FACE, NONFACE, FACE)

    path = tmp_path / "model.knn"
    detect.save_knn(model, path)
    assert path.read_text().startswith("KNN3 60 60 3\n")
    loaded = detect.load_knn(path)
    assert np.array_equal(loaded.features, model.features)
    for _ in range(5):
        query = rng.integers(0, 256, size=(60, 60))
        assert detect.knn_classify(loaded, query) == detect.knn_classify(model, query)


def test_manifest_row_with_missing_file(tmp_path):
    manifest = write_manifest(tmp_path, [("a.pgm", 10, "face")])
    with open(manifest, "a") as fh:
        fh.write("gone.pgm,nonface\n")
    with pytest.raises(PnmError, match="manifest.txt:3"):
        detect.train_knn(manifest)


def test_manifest_bad_label(tmp_path):
    manifest = tmp_path / "m.txt"
    manifest.write_text("a.pgm,smile\n")
    with pytest.raises(ModelFileError, match="m.txt:1"):
        detect.read_manifest(manifest)


def test_too_few_samples(tmp_path):
    manifest = write_manifest(tmp_path, [("a.pgm", 10, "face"), ("b.pgm", 20, "nonface")])
    with pytest.raises(ModelFileError):
        detect.train_knn(manifest, k=3)


def test_load_knn_errors(tmp_path):
    with pytest.raises(ModelFileError, match="not found"):
        detect.load_knn(tmp_path / "missing.knn")
    bad = tmp_path / "bad.knn"
    bad.write_text("KNN 60 60\n")
    with pytest.raises(ModelFileError, match="malformed header"):
        detect.load_knn(bad)
    short = tmp_path / "short.knn"
    short.write_text("KNN3 1 2 3\nface 1 2\nface 3 4\n")
    with pytest.raises(ModelFileError, match="announces 3"):
        detect.load_knn(short)


def skin_frame(squares, shape):
    rgb = np.empty(shape + (3,), dtype=np.uint8)
    rgb[:] = phantoms.GRAY_RGB
    for y0, x0, side in squares:
        rgb[y0:y0 + side, x0:x0 + side] = phantoms.SKIN_RGB
    return RgbImage(rgb)


def labelled_model(fm, label):
    return detect.knn_from_samples([(b, label) for _, b in detect.extract_blocks(fm)] * 3, 3)


def test_face_detect_needs_skin(rng):
    fm = GrayImage(rng.integers(0, 256, size=(150, 150)))
    rgb = skin_frame([], (150, 150))
    assert detect.face_detect(rgb, fm, labelled_model(fm, FACE)) == []


def test_face_detect_merges_blocks_on_a_skin_square(rng):
    fm = GrayImage(rng.integers(0, 256, size=(150, 150)))
    rgb = skin_frame([(30, 30, 80)], (150, 150))
    detections = detect.face_detect(rgb, fm, labelled_model(fm, FACE))
    assert len(detections) == 1
    face = detections[0]
    assert face.kind is Kind.FACE
    assert face.box.to_list() == [0, 0, 149, 149]
    assert face.centroid == face.box.center
    assert face.score == 1.0


def test_face_detect_keeps_far_regions_apart(rng):
    fm = GrayImage(rng.integers(0, 256, size=(60, 300)))
    rgb = skin_frame([(0, 0, 60), (0, 200, 60)], (60, 300))
    detections = detect.face_detect(rgb, fm, labelled_model(fm, FACE))
    assert [d.box.to_list() for d in detections] == [[0, 0, 89, 59], [180, 0, 299, 59]]


def test_face_detect_nonface_model(rng):
    fm = GrayImage(rng.integers(0, 256, size=(150, 150)))
    rgb = skin_frame([(30, 30, 80)], (150, 150))
    assert detect.face_detect(rgb, fm, labelled_model(fm, NONFACE)) == []


def test_face_detect_size_mismatch():
    with pytest.raises(ValueError):
        detect.face_detect(skin_frame([], (60, 60)), gray(61, 60), phantoms.nonface_model())


def columns_image(counts, height=5):
    pixels = np.zeros((height, len(counts)), dtype=bool)
    for c, n in enumerate(counts):
        pixels[:n, c] = True
    return BinaryImage(pixels)


def test_top_columns():
    kept = detect.top_columns(columns_image([5, 1, 3, 2]), 2).pixels.sum(axis=0)
    assert kept.tolist() == [5, 0, 3, 0]
    assert detect.top_columns(columns_image([4, 4, 1]), 1).pixels.sum(axis=0).tolist() == [4, 0, 0]
    img = columns_image([0, 2, 0, 1])
    assert np.array_equal(detect.top_columns(img, 10).pixels, img.pixels)


def test_top_columns_keeps_the_largest_counts(rng):
    img = BinaryImage(rng.random((30, 40)) < 0.3)
    counts = img.pixels.sum(axis=0)
    out = detect.top_columns(img, 7)
    assert out.count() == int(np.sort(counts)[::-1][:7].sum())
    for c in np.nonzero(out.pixels.sum(axis=0))[0]:
        assert np.array_equal(out.pixels[:, c], img.pixels[:, c])


def density_oracle(mask, s):
    best = (None, None, -1.0)
    height, width = mask.shape
    for i in range(height - s + 1):
        for j in range(width - s + 1):
            rate = int(mask[i:i + s, j:j + s].sum()) / (s * s)
            if rate > best[2]:
                best = (i, j, rate)
    return best


def test_density_examples():
    assert detect.highest_dot_density_area(BinaryImage(np.ones((10, 10))), 4) == (0, 0, 1.0)
    single = np.zeros((12, 12))
    single[7, 7] = 1
    assert detect.highest_dot_density_area(BinaryImage(single), 4) == (4, 4, 1 / 16)


def test_density_matches_literal_scan(rng):
    for _ in range(200):
        height, width = rng.integers(8, 31, size=2)
        s = int(rng.choice([3, 5, 8]))
        mask = rng.random((height, width)) < rng.uniform(0.05, 0.6)
        assert detect.highest_dot_density_area(BinaryImage(mask), s) == density_oracle(mask, s)


def test_density_window_too_large():
    with pytest.raises(DegenerateInputError):
        detect.highest_dot_density_area(BinaryImage(np.ones((10, 10))), 11)


@pytest.fixture(scope="module")
def head_planes(bank):
    """AM and FM planes of demodulated head frames, one per variant."""
    cache = {}

    def planes(**variant):
        key = tuple(sorted(variant.items()))
        if key not in cache:
            am, fm, _, _ = amfm.amfm_images(phantoms.head_frame(**variant), bank)
            cache[key] = (am, fm)
        return cache[key]

    return planes


def test_back_of_head_phantom(head_planes):
    am, fm = head_planes()
    head = detect.back_of_head_detect(am, fm)
    assert head.kind is Kind.BACK_OF_HEAD
    cx, cy = phantoms.head_center()
    assert np.hypot(head.box.center[0] - cx, head.box.center[1] - cy) < 5
    assert np.hypot(head.centroid[0] - cx, head.centroid[1] - cy) < 10
    lo, hi = phantoms.HEAD_BLOCK
    assert head.box.y0 == pytest.approx(lo, abs=3)
    assert head.box.y1 == pytest.approx(hi, abs=3)
    # the hair block is wider than the density window
    assert head.box.width > detect.HEAD_WINDOW
    assert 0 < head.score <= 1


def test_back_of_head_follows_a_shift(head_planes):
    base = detect.back_of_head_detect(*head_planes()).centroid
    moved = detect.back_of_head_detect(*head_planes(shift=50)).centroid
    assert moved[0] - base[0] == pytest.approx(50, abs=5)
    assert moved[1] == pytest.approx(base[1], abs=5)
    cx, cy = phantoms.head_center(shift=50)
    assert np.hypot(moved[0] - cx, moved[1] - cy) < 20


def test_back_of_head_mirrored(head_planes):
    head = detect.back_of_head_detect(*head_planes(mirror=True))
    cx, cy = phantoms.head_center(mirror=True)
    assert np.hypot(head.box.center[0] - cx, head.box.center[1] - cy) < 20


def test_back_of_head_ignores_the_skin_patch(head_planes):
    plain = detect.back_of_head_detect(*head_planes(with_skin=False))
    skin = detect.back_of_head_detect(*head_planes(with_skin=True))
    assert skin.box.center == pytest.approx(plain.box.center, abs=5)


def test_refine_keeps_the_whole_component():
    mask = np.zeros((40, 60), dtype=bool)
    mask[5:30, 10:50] = True
    mask[32:39, 0:8] = True
    box, centroid = detect.refine_head_box(BinaryImage(mask), BBox(0, 0, 29, 29))
    assert box.to_list() == [10, 5, 49, 29]
    assert centroid == pytest.approx((29.5, 17.0))


def test_refine_ignores_components_outside_the_window():
    mask = np.zeros((50, 50), dtype=bool)
    mask[0:3, 0:3] = True
    mask[10:14, 10:14] = True
    mask[30:50, 30:50] = True
    box, centroid = detect.refine_head_box(BinaryImage(mask), BBox(0, 0, 19, 19))
    assert box.to_list() == [10, 10, 13, 13]
    assert centroid == pytest.approx((11.5, 11.5))


def test_refine_tie_goes_to_the_first_component():
    mask = np.zeros((20, 20), dtype=bool)
    mask[0:2, 0:2] = True
    mask[5:7, 5:7] = True
    box, _ = detect.refine_head_box(BinaryImage(mask), BBox(0, 0, 9, 9))
    assert box.to_list() == [0, 0, 1, 1]


def test_refine_without_a_component_keeps_the_window():
    mask = np.zeros((30, 30), dtype=bool)
    mask[25:, 25:] = True
    window = BBox(0, 0, 9, 9)
    assert detect.refine_head_box(BinaryImage(mask), window) == (window, window.center)


def test_back_of_head_uniform_frame():
    with pytest.raises(DegenerateInputError):
        detect.back_of_head_detect(gray(240, 240, 230.0), gray(240, 240, 230.0))


def test_back_of_head_frame_too_small():
    with pytest.raises(DegenerateInputError):
        detect.back_of_head_detect(gray(100, 100), gray(100, 100))

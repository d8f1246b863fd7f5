import json
import random
import struct
import zlib

import pytest

import emfe


def write_png(path, width, height, pixel):
    """Minimal 8-bit RGB PNG writer so the test needs no imaging package."""
    raw = b"".join(
        b"\x00" + b"".join(bytes(pixel(x, y)) for x in range(width)) for y in range(height)
    )

    def chunk(tag, data):
        body = tag + data
        return struct.pack(">I", len(data)) + body + struct.pack(">I", zlib.crc32(body) & 0xFFFFFFFF)

    header = struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0)
    with open(path, "wb") as f:
        f.write(b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", header) + chunk(b"IDAT", zlib.compress(raw)) + chunk(b"IEND", b""))


def cell(radius, hole):
    def pixel(x, y):
        d = ((x - 64) ** 2 + (y - 64) ** 2) ** 0.5
        dark = d <= radius and not (hole and ((x - 70) ** 2 + (y - 60) ** 2) ** 0.5 <= 6)
        return (170, 105, 140) if dark else (238, 226, 230)

    return pixel


def test_otsu_and_holes():
    hist = [0] * 256
    hist[10] = 500
    hist[200] = 500
    assert emfe.otsu_cut(hist) == 10
    ring = [[True] * 5 for _ in range(5)]
    ring[2][2] = False
    assert emfe.count_holes(ring, 8) == 1
    assert emfe.count_holes([[False] * 4] * 4, 4) == 0


def test_extract_file(tmp_path):
    path = tmp_path / "cell.png"
    write_png(path, 128, 128, cell(40, True))
    features = emfe.extract_file(str(path))
    assert features["foreground"] + features["background"] == 128 * 128
    assert features["holes"] == 1
    threshold, mask = emfe.mask_of(str(path))
    assert len(mask) == 128 and len(mask[0]) == 128
    assert 0.0 < threshold < 1.0


def test_report_matches_known_values():
    r = emfe.report(2013, 164, 51, 1905)
    assert r["parasitized"]["precision"] == pytest.approx(97.53)
    assert r["accuracy"] == pytest.approx(94.80)


def test_train_predict_round_trip(tmp_path):
    rng = random.Random(3)
    X = [[rng.uniform(-3, 3), rng.uniform(-3, 3)] for _ in range(200)]
    y = [1 if a + 0.5 * b > 0 else 0 for a, b in X]
    for family in ("logreg", "rf", "knn", "svm", "ensemble"):
        model = emfe.train(family, X, y, params="", seed=7)
        assert model.kind == family
        assert model.n_features == 2
        preds = model.predict(X)
        assert sum(p == t for p, t in zip(preds, y)) / len(y) > 0.85
        back = emfe.model_from_bytes(model.to_bytes())
        assert back.predict(X) == preds
        assert back.predict_proba(X) == model.predict_proba(X)
    model = emfe.train("logreg", X, y, params=json.dumps({"C": 0.5, "penalty": "l1"}))
    path = tmp_path / "lr.emfe"
    model.save(str(path))
    assert emfe.load_model(str(path)).predict(X) == model.predict(X)
    assert model.sidecar(["foreground", "holes"])["hyperparameters"]["penalty"] == "l1"
    cv = emfe.cross_validate("logreg", X, y, k=4)
    assert len(cv["folds"]) == 4


def test_errors_surface_as_emfe_error(tmp_path):
    with pytest.raises(emfe.EmfeError, match="NonBinaryLabels"):
        emfe.train("logreg", [[0.0], [1.0]], [0, 2])
    with pytest.raises(emfe.EmfeError, match="CorruptModel"):
        emfe.model_from_bytes(b"EMFE garbage")
    with pytest.raises(emfe.EmfeError, match="IoError"):
        emfe.load_model(str(tmp_path / "missing.emfe"))


def test_cli_in_process(tmp_path):
    for label, radius, hole in (("Parasitized", 46, True), ("Uninfected", 36, False)):
        (tmp_path / "data" / label).mkdir(parents=True)
        for i in range(6):
            write_png(tmp_path / "data" / label / f"c{i}.png", 128, 128, cell(radius - i % 3, hole))
    code, out, err = emfe.run_cli(["extract", "--data", str(tmp_path / "data"), "--out", str(tmp_path / "out")])
    assert code == 0, err
    assert "extracted 12 images" in out
    rows = emfe.load_table(str(tmp_path / "out" / "features.csv"))
    assert len(rows) == 12
    assert {r["label"] for r in rows} == {0, 1}

    code, _, err = emfe.run_cli(["train", "--table", "x.csv", "--model", "boosting"])
    assert code == 64
    assert json.loads(err)["error"]["exit_code"] == 64

"""Smoke test for the puckergrade_py extension module.

Build and install first, e.g.:

    pip install maturin
    maturin build --release -m crates/py/Cargo.toml
    pip install target/wheels/puckergrade_py-*.whl

then run ``python python/smoke_test.py``.
"""

import tempfile
from pathlib import Path

import puckergrade_py as pg


def check(cond, what):
    if not cond:
        raise SystemExit(f"FAIL: {what}")
    print(f"ok: {what}")


def main():
    flat = pg.GrayImage(4, 4, bytes([77] * 16))
    spec = pg.dft2(flat)
    check(abs(spec.get(0, 0) - 77) < 1e-12, "constant image DC equals the mean")
    check(max(abs(v) for v in spec.values()[1:]) < 1e-12, "constant image has no AC energy")
    check(max(abs(a - b) for a, b in zip(spec.inverse(), flat.pixels())) < 1e-9, "inverse DFT round trip")

    two = pg.GrayImage(4, 1, bytes([10, 10, 200, 200]))
    check(pg.otsu_threshold(two) == 10, "Otsu splits a two-level image")
    check(pg.otsu_threshold(flat) is None, "Otsu reports a uniform image")
    check(pg.binarize(two, 10).pixels() == bytes([0, 0, 255, 255]), "binarize")

    check(pg.sp_thickness(2.5, 1.0) == 25.0, "thickness indicator")
    check(pg.sp_length(100.0, 100.0) == 0.0, "length indicator")

    som = pg.SomModel(4, 4, 3, seed=1)
    protos = [([0.1, 0.1, 0.9], 1), ([0.9, 0.1, 0.1], 5)]
    som.train([p for p, _ in protos])
    som.label_nodes(protos)
    check(som.classify([0.1, 0.1, 0.9]).grade == 1, "SOM classifies a prototype to its grade")
    check(pg.SomModel.from_bytes(som.to_bytes()).weights() == som.weights(), "SOM bytes round trip")

    with tempfile.TemporaryDirectory() as tmp:
        data = Path(tmp) / "data"
        pg.write_dataset(str(data), train=5, test=10, seed=3, size=64)
        cfg = pg.PipelineConfig("transform_size = 64\nfeature_side = 16\n")
        model = pg.TrainedModel.train(str(data), cfg, role="train")
        path = Path(tmp) / "m.pksm"
        model.save(str(path))
        loaded = pg.TrainedModel.load(str(path))
        check(loaded.to_bytes() == model.to_bytes(), "model file round trip")
        sample = pg.GrayImage.load(str(data / "g1_train_0.png"))
        check(loaded.classify(sample).grade == 1, "training image classifies to its own grade")
        accuracy, rows = loaded.evaluate(str(data), role="test")
        check(len(rows) == 10 and 0.0 <= accuracy <= 100.0, f"evaluation ran ({accuracy:.2f}%)")

    print("all smoke checks passed")


if __name__ == "__main__":
    main()

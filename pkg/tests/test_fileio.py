import json
import struct

import numpy as np
import pytest

from tpspp import fileio, network
from tpspp.errors import (DuplicateEntryError, FormatError, TpsError, TruncationError,
                          ValidationError)
from tpspp.tps import make_grid
from tpspp.warp import AttentionMatrix


class TestWeights:
    def test_empty_store_is_header_only(self, tmp_path):
        p = tmp_path / "w.tpsw"
        fileio.save_weights(network.WeightStore({}), p)
        assert p.read_bytes() == b"TPSW" + struct.pack("<II", 1, 0)

    def test_single_tensor_layout(self, tmp_path):
        p = tmp_path / "w.tpsw"
        fileio.save_weights(network.WeightStore({"b": np.array([1.0, 2.0])}), p)
        want = b"TPSW" + struct.pack("<II", 1, 1)
        want += struct.pack("<I", 1) + b"b" + struct.pack("<II", 1, 2)
        want += struct.pack("<2f", 1.0, 2.0)
        assert p.read_bytes() == want

    def test_roundtrip_bit_identical(self, tmp_path):
        rng = np.random.default_rng(0)
        tensors = {f"t{i:02d}": rng.standard_normal(
            tuple(rng.integers(1, 6, size=rng.integers(1, 5)))).astype(np.float32)
            for i in range(20)}
        p1, p2 = tmp_path / "a.tpsw", tmp_path / "b.tpsw"
        fileio.save_weights(network.WeightStore(tensors), p1)
        fileio.save_weights(fileio.load_weights(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_lexicographic_order(self, tmp_path):
        p = tmp_path / "w.tpsw"
        fileio.save_weights(network.WeightStore(
            {"z": np.zeros(1), "a": np.zeros(1)}), p)
        blob = p.read_bytes()
        assert blob.index(b"a") < blob.index(b"z")

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "w.tpsw"
        p.write_bytes(b"NOPE" + struct.pack("<II", 1, 0))
        with pytest.raises(FormatError):
            fileio.load_weights(p)

    def test_bad_version(self, tmp_path):
        p = tmp_path / "w.tpsw"
        p.write_bytes(b"TPSW" + struct.pack("<II", 9, 0))
        with pytest.raises(FormatError):
            fileio.load_weights(p)

    def test_truncated_payload(self, tmp_path):
        p = tmp_path / "w.tpsw"
        fileio.save_weights(network.WeightStore({"b": np.ones(8)}), p)
        (tmp_path / "t.tpsw").write_bytes(p.read_bytes()[:-4])
        with pytest.raises(TruncationError):
            fileio.load_weights(tmp_path / "t.tpsw")

    def test_duplicate_names(self, tmp_path):
        rec = struct.pack("<I", 1) + b"b" + struct.pack("<II", 1, 1) + struct.pack("<f", 0.0)
        blob = b"TPSW" + struct.pack("<II", 1, 2) + rec + rec
        p = tmp_path / "w.tpsw"
        p.write_bytes(blob)
        with pytest.raises(DuplicateEntryError):
            fileio.load_weights(p)

    def test_corruption_fuzz(self, tmp_path):
        fileio.save_weights(network.init_weights(0), tmp_path / "w.tpsw")
        blob = (tmp_path / "w.tpsw").read_bytes()
        rng = np.random.default_rng(1)
        bad = tmp_path / "bad.tpsw"
        for i in range(1000):
            data = bytearray(blob)
            if i % 2:
                data = data[:int(rng.integers(0, len(blob)))]
            else:
                data[int(rng.integers(0, len(blob)))] = int(rng.integers(0, 256))
            bad.write_bytes(bytes(data))
            try:
                fileio.load_weights(bad)
            except TpsError:
                pass  # typed errors are the contract; crashes are not


class TestImages:
    def test_p5_single_white_pixel(self, tmp_path):
        p = tmp_path / "a.pgm"
        p.write_bytes(b"P5\n1 1\n255\n\xff")
        t = fileio.load_image(p)
        assert t.shape == (1, 1, 1)
        assert t[0, 0, 0] == 1.0

    def test_p5_roundtrip_bit_identical(self, tmp_path):
        rng = np.random.default_rng(2)
        img = rng.uniform(0, 1, size=(1, 7, 9)).astype(np.float32)
        p1, p2 = tmp_path / "a.pgm", tmp_path / "b.pgm"
        fileio.save_image(img, p1)
        fileio.save_image(fileio.load_image(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_p6_red_pixel_luminance(self, tmp_path):
        p = tmp_path / "a.ppm"
        p.write_bytes(b"P6\n1 1\n255\n\xff\x00\x00")
        assert abs(float(fileio.load_image(p)[0, 0, 0]) - 0.299) <= 1.0 / 255.0

    def test_p3_parsing(self, tmp_path):
        p = tmp_path / "a.ppm"
        p.write_bytes(b"P3\n2 1\n255\n255 255 255  0 0 0\n")
        t = fileio.load_image(p)
        assert abs(float(t[0, 0, 0]) - 1.0) <= 1e-6
        assert t[0, 0, 1] == 0.0

    def test_comments_in_header(self, tmp_path):
        p = tmp_path / "a.pgm"
        p.write_bytes(b"P5\n# a comment\n1 1\n255\n\x80")
        assert fileio.load_image(p).shape == (1, 1, 1)

    def test_unsupported_magic(self, tmp_path):
        p = tmp_path / "a.pbm"
        p.write_bytes(b"P1\n1 1\n1")
        with pytest.raises(FormatError):
            fileio.load_image(p)

    def test_unsupported_maxval(self, tmp_path):
        p = tmp_path / "a.pgm"
        p.write_bytes(b"P5\n1 1\n65535\n\x00\x00")
        with pytest.raises(FormatError):
            fileio.load_image(p)

    def test_truncated_binary_payload(self, tmp_path):
        p = tmp_path / "a.pgm"
        p.write_bytes(b"P5\n4 4\n255\n\x00\x00")
        with pytest.raises(TruncationError):
            fileio.load_image(p)

    def test_quantization(self, tmp_path):
        p = tmp_path / "a.pgm"
        fileio.save_image(np.array([[[0.5]]], np.float32), p)
        assert p.read_bytes().endswith(bytes([128]))  # round(0.5*255) = 128


class TestGridJson:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(3)
        grid = make_grid(4, 16).with_offsets(rng.uniform(-0.1, 0.1, size=(64, 2)))
        att = AttentionMatrix(rng.uniform(-0.9, 0.9, size=(12, 64)))
        p = tmp_path / "g.json"
        fileio.export_grid_json(grid, att, p, lam=0.3, beta=0.8)
        g2, a2, lam, beta = fileio.import_grid_json(p)
        assert np.abs(g2.offsets - grid.offsets).max() <= 1e-9
        assert np.abs(a2.scores - att.scores).max() <= 1e-9
        assert lam == 0.3 and beta == 0.8

    def test_null_attention(self, tmp_path):
        p = tmp_path / "g.json"
        fileio.export_grid_json(make_grid(4, 16), None, p)
        _, att, _, _ = fileio.import_grid_json(p)
        assert att is None

    def test_out_of_bound_attention_names_index(self, tmp_path):
        p = tmp_path / "g.json"
        grid = make_grid(2, 2)
        doc = {"rows": 2, "cols": 2, "base": grid.base.tolist(),
               "offsets": grid.offsets.tolist(), "lambda": 0.5, "beta": 1.0,
               "attention": [[0.0, 0.0, 0.0, 0.0], [0.0, 1.5, 0.0, 0.0]]}
        p.write_text(json.dumps(doc))
        with pytest.raises(ValidationError, match="row 1, col 1"):
            fileio.import_grid_json(p)

    def test_k_mismatch(self, tmp_path):
        p = tmp_path / "g.json"
        grid = make_grid(2, 2)
        doc = {"rows": 2, "cols": 2, "base": grid.base.tolist(),
               "offsets": grid.offsets.tolist(), "lambda": 0.5, "beta": 1.0,
               "attention": [[0.0, 0.0, 0.0]]}
        p.write_text(json.dumps(doc))
        with pytest.raises(ValidationError):
            fileio.import_grid_json(p)

    def test_non_lattice_base_rejected(self, tmp_path):
        p = tmp_path / "g.json"
        grid = make_grid(2, 2)
        base = grid.base.tolist()
        base[0][0] += 0.5
        doc = {"rows": 2, "cols": 2, "base": base, "offsets": grid.offsets.tolist(),
               "lambda": 0.5, "beta": 1.0, "attention": None}
        p.write_text(json.dumps(doc))
        with pytest.raises(ValidationError):
            fileio.import_grid_json(p)

    def test_missing_field(self, tmp_path):
        p = tmp_path / "g.json"
        p.write_text("{}")
        with pytest.raises(ValidationError):
            fileio.import_grid_json(p)

    def test_invalid_json(self, tmp_path):
        p = tmp_path / "g.json"
        p.write_text("{not json")
        with pytest.raises(FormatError):
            fileio.import_grid_json(p)

import gzip
import struct

import numpy as np
import pytest

from sparsequbo.imaging import (
    IdxFormatError,
    encode_idx,
    format_pgm,
    load_idx,
    parse_idx,
    patchify,
    unpatchify,
)


class TestIdx:
    def test_all_zero_fixture(self, tmp_path):
        path = tmp_path / "zeros-idx3-ubyte"
        path.write_bytes(struct.pack(">IIII", 0x803, 2, 28, 28) + bytes(2 * 28 * 28))
        images = load_idx(path)
        assert images.shape == (2, 28, 28)
        assert np.all(images == 0.0)

    def test_pixel_scaling(self):
        raw = np.arange(28 * 28, dtype=np.int64).reshape(1, 28, 28) % 256
        images = parse_idx(encode_idx(raw.astype(np.uint8)))
        assert np.array_equal(images[0], raw[0] / 255.0)
        assert images.min() >= 0.0 and images.max() <= 1.0

    def test_gzip(self, tmp_path):
        raw = np.random.default_rng(0).integers(0, 256, (3, 28, 28)).astype(np.uint8)
        path = tmp_path / "t.gz"
        path.write_bytes(encode_idx(raw, compress=True))
        assert gzip.decompress(path.read_bytes())[:4] == b"\x00\x00\x08\x03"
        assert np.array_equal(load_idx(path), raw / 255.0)

    def test_truncated_body(self):
        data = encode_idx(np.zeros((2, 28, 28), dtype=np.uint8))
        with pytest.raises(IdxFormatError, match="count"):
            parse_idx(data[:-1])

    def test_truncated_header(self):
        with pytest.raises(IdxFormatError, match="header"):
            parse_idx(b"\x00\x00\x08\x03\x00")

    def test_wrong_magic(self):
        data = struct.pack(">IIII", 0x801, 1, 28, 28) + bytes(784)
        with pytest.raises(IdxFormatError, match="magic"):
            parse_idx(data)

    @pytest.mark.parametrize("rows,cols,field", [(27, 28, "rows"), (28, 32, "cols")])
    def test_wrong_dimensions(self, rows, cols, field):
        data = struct.pack(">IIII", 0x803, 1, rows, cols) + bytes(rows * cols)
        with pytest.raises(IdxFormatError, match=field):
            parse_idx(data)


class TestPatches:
    def test_constant_image(self):
        patches = patchify(np.full((28, 28), 0.25))
        assert patches.shape == (16, 49)
        assert np.all(patches == 0.25)

    def test_single_pixel(self):
        image = np.zeros((28, 28))
        image[0, 0] = 1.0
        patches = patchify(image)
        assert patches[0, 0] == 1.0
        assert patches.sum() == 1.0

    def test_patch_layout(self):
        image = np.arange(784.0).reshape(28, 28)
        patches = patchify(image)
        for r in range(4):
            for c in range(4):
                block = image[7 * r:7 * r + 7, 7 * c:7 * c + 7]
                assert np.array_equal(patches[4 * r + c], block.ravel())

    def test_round_trip(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            image = rng.random((28, 28))
            assert np.array_equal(unpatchify(patchify(image)), image)

    def test_locality(self):
        rng = np.random.default_rng(1)
        image = rng.random((28, 28))
        base = patchify(image)
        for r, c in rng.integers(0, 28, (20, 2)):
            changed = image.copy()
            changed[r, c] += 1.0
            diff = np.any(patchify(changed) != base, axis=1)
            assert np.flatnonzero(diff).tolist() == [4 * (r // 7) + c // 7]

    def test_unpatchify_zero(self):
        assert np.array_equal(unpatchify(np.zeros((16, 49))), np.zeros((28, 28)))

    def test_unpatchify_last_patch(self):
        patches = np.zeros((16, 49))
        patches[15] = 1.0
        image = unpatchify(patches)
        assert np.all(image[21:, 21:] == 1.0)
        assert image.sum() == 49

    def test_wrong_shapes(self):
        with pytest.raises(ValueError):
            patchify(np.zeros((28, 27)))
        with pytest.raises(ValueError):
            unpatchify(np.zeros((15, 49)))


def test_pgm():
    text = format_pgm(np.array([[0.0, 1.0, 2.0], [0.5, -1.0, 0.2]]))
    assert text.splitlines() == ["P2", "3 2", "255", "0 255 255", "128 0 51"]

"""Raster model, mean luminance, quantization, and file round trips."""

import numpy as np
import pytest

import cv2

from lumifuse import Raster, load_raster, mean_luminance, save_raster
from lumifuse.image_io import ImageFormatError, quantize


class TestRasterModel:
    def test_shape_is_validated(self):
        with pytest.raises(ValueError):
            Raster(np.zeros((4, 4)))
        with pytest.raises(ValueError):
            Raster(np.zeros((4, 4, 4)))
        with pytest.raises(ValueError):
            Raster(np.zeros((0, 4, 3)))

    def test_data_is_immutable(self):
        r = Raster.full(2, 3, 0.5)
        with pytest.raises(ValueError):
            r.data[0, 0, 0] = 1.0

    def test_constructor_copies(self):
        arr = np.zeros((2, 2, 3))
        r = Raster(arr)
        arr[0, 0, 0] = 9.0
        assert r.data[0, 0, 0] == 0.0

    def test_full_accepts_rgb_triple(self):
        r = Raster.full(1, 1, (0.1, 0.2, 0.3))
        assert tuple(r.data[0, 0]) == (0.1, 0.2, 0.3)

    def test_clamped(self):
        r = Raster(np.array([[[-0.5, 0.5, 1.5]]]))
        assert tuple(r.clamped().data[0, 0]) == (0.0, 0.5, 1.0)


class TestMeanLuminance:
    def test_constant(self):
        assert mean_luminance(Raster.full(5, 4, 0.4)) == pytest.approx(0.4, abs=1e-12)

    def test_half_zero_half_one(self):
        arr = np.zeros((2, 4, 3))
        arr[:, 2:, :] = 1.0
        assert mean_luminance(Raster(arr)) == 0.5

    def test_matches_naive_summation(self, rng):
        arr = rng.random((4, 4, 3))
        total = 0.0
        for y in range(4):
            for x in range(4):
                for c in range(3):
                    total += arr[y, x, c]
        assert mean_luminance(Raster(arr)) == pytest.approx(total / 48.0, abs=1e-9)

    def test_is_linear(self, rng):
        a = rng.random((6, 5, 3))
        b = rng.random((6, 5, 3))
        alpha, beta = 0.7, -1.3
        lhs = mean_luminance(Raster(alpha * a + beta * b))
        rhs = alpha * mean_luminance(Raster(a)) + beta * mean_luminance(Raster(b))
        assert lhs == pytest.approx(rhs, abs=1e-12)


class TestQuantize:
    def test_half_rounds_up(self):
        # 0.5 * 255 = 127.5; round half away from zero gives 128
        assert quantize(np.array([[[0.5, 0.5, 0.5]]]), 8)[0, 0, 0] == 128

    def test_clamps_below_zero(self):
        assert quantize(np.array([[[-0.2, 0.0, 0.0]]]), 8)[0, 0, 0] == 0

    def test_full_scale_16(self):
        q = quantize(np.array([[[1.0, 2.0, 1.0]]]), 16)
        assert q.dtype == np.uint16
        assert q[0, 0, 0] == 65535 and q[0, 0, 1] == 65535

    def test_exact_half_boundary(self):
        # 1/510 * 255 = 0.5 exactly in binary? 1/510 is inexact; use 127.5/255.
        assert quantize(np.array([[[127.5 / 255.0] * 3]]), 8)[0, 0, 0] == 128

    def test_rejects_bad_depth(self):
        with pytest.raises(ValueError):
            quantize(np.zeros((1, 1, 3)), 12)


class TestPngIO:
    def test_8bit_pixel_values(self, tmp_path):
        # Oracle encoder: write the pixel (R=255, G=0, B=128) with cv2 directly.
        path = tmp_path / "px.png"
        cv2.imwrite(str(path), np.array([[[128, 0, 255]]], dtype=np.uint8))  # BGR
        r = load_raster(path)
        assert r.data.shape == (1, 1, 3)
        assert tuple(r.data[0, 0]) == (1.0, 0.0, 128 / 255.0)

    def test_16bit_full_scale(self, tmp_path):
        path = tmp_path / "px16.png"
        cv2.imwrite(str(path), np.full((1, 1, 3), 65535, dtype=np.uint16))
        r = load_raster(path)
        assert tuple(r.data[0, 0]) == (1.0, 1.0, 1.0)

    @pytest.mark.parametrize("bit_depth", [8, 16])
    def test_roundtrip_error_bound(self, tmp_path, rng, bit_depth):
        img = Raster(rng.random((7, 5, 3)))
        path = tmp_path / "rt.png"
        save_raster(img, path, bit_depth)
        back = load_raster(path)
        bound = 0.5 / ((1 << bit_depth) - 1) + 1e-12
        assert np.max(np.abs(back.data - img.data)) <= bound

    def test_loaded_samples_stay_in_range(self, tmp_path, rng):
        img = Raster(rng.random((6, 6, 3)) * 3.0 - 1.0)  # out-of-range input
        path = tmp_path / "range.png"
        save_raster(img, path, 8)
        back = load_raster(path)
        assert back.data.min() >= 0.0 and back.data.max() <= 1.0

    def test_save_is_deterministic(self, tmp_path, rng):
        img = Raster(rng.random((9, 4, 3)))
        p1, p2 = tmp_path / "a.png", tmp_path / "b.png"
        save_raster(img, p1, 8)
        save_raster(img, p2, 8)
        assert p1.read_bytes() == p2.read_bytes()

    def test_grayscale_png_rejected(self, tmp_path):
        path = tmp_path / "gray.png"
        cv2.imwrite(str(path), np.zeros((3, 3), dtype=np.uint8))
        with pytest.raises(ImageFormatError, match="3 channels"):
            load_raster(path)

    def test_corrupt_png_rejected(self, tmp_path):
        path = tmp_path / "bad.png"
        path.write_bytes(b"\x89PNG\r\n\x1a\n" + b"garbage")
        with pytest.raises(ImageFormatError, match="PNG"):
            load_raster(path)


class TestPpmIO:
    def test_roundtrip_within_one_level(self, tmp_path, rng):
        img = Raster(rng.random((2, 2, 3)))
        path = tmp_path / "rt.ppm"
        save_raster(img, path, 8)
        back = load_raster(path)
        assert np.max(np.abs(back.data - img.data)) <= 1.0 / 255.0

    def test_16bit_big_endian_samples(self, tmp_path):
        # One pixel, maxval 65535: sample bytes 0x01 0x00 mean 256.
        path = tmp_path / "hand.ppm"
        path.write_bytes(b"P6\n1 1\n65535\n" + bytes([1, 0, 1, 0, 1, 0]))
        r = load_raster(path)
        assert np.allclose(r.data, 256 / 65535.0)

    def test_16bit_roundtrip_exact_levels(self, tmp_path, rng):
        img = Raster(rng.random((3, 4, 3)))
        path = tmp_path / "rt16.ppm"
        save_raster(img, path, 16)
        back = load_raster(path)
        assert np.max(np.abs(back.data - img.data)) <= 0.5 / 65535.0 + 1e-12

    def test_header_comments_allowed(self, tmp_path):
        path = tmp_path / "c.ppm"
        path.write_bytes(b"P6\n# a comment\n2 1\n255\n" + bytes(6))
        r = load_raster(path)
        assert r.data.shape == (1, 2, 3)

    def test_pgm_rejected(self, tmp_path):
        path = tmp_path / "gray.pgm"
        path.write_bytes(b"P5\n1 1\n255\n\x00")
        with pytest.raises(ImageFormatError, match="P6"):
            load_raster(path)

    def test_truncated_ppm_rejected(self, tmp_path):
        path = tmp_path / "short.ppm"
        path.write_bytes(b"P6\n2 2\n255\n" + bytes(5))
        with pytest.raises(ImageFormatError, match="truncated"):
            load_raster(path)

    def test_odd_maxval_rejected(self, tmp_path):
        path = tmp_path / "odd.ppm"
        path.write_bytes(b"P6\n1 1\n1023\n" + bytes(6))
        with pytest.raises(ImageFormatError, match="maxval"):
            load_raster(path)

    def test_bad_header_token_rejected(self, tmp_path):
        path = tmp_path / "tok.ppm"
        path.write_bytes(b"P6\nwide 1\n255\n" + bytes(3))
        with pytest.raises(ImageFormatError, match="header"):
            load_raster(path)


class TestDispatch:
    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_raster(tmp_path / "nope.png")

    def test_unknown_magic(self, tmp_path):
        path = tmp_path / "blob.png"
        path.write_bytes(b"not an image at all")
        with pytest.raises(ImageFormatError, match="unsupported"):
            load_raster(path)

    def test_unknown_extension_on_save(self, tmp_path):
        with pytest.raises(ImageFormatError, match="extension"):
            save_raster(Raster.full(1, 1, 0.0), tmp_path / "img.bmp", 8)

    def test_load_by_magic_not_extension(self, tmp_path, rng):
        # A PNG stored with a .ppm name still loads: magic bytes win.
        img = Raster(rng.random((3, 3, 3)))
        png_path = tmp_path / "real.png"
        save_raster(img, png_path, 8)
        disguised = tmp_path / "disguised.ppm"
        disguised.write_bytes(png_path.read_bytes())
        assert load_raster(disguised).data.shape == (3, 3, 3)

import struct

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from nlprender.core import DisplayModel
from nlprender.errors import ConfigurationError, ConstraintViolation, FormatError
from nlprender.fileio import (
    decode_hdr,
    decode_pfm,
    decode_png,
    detect_format,
    encode_hdr_flat,
    encode_pfm,
    encode_png,
    load_image,
    quantize,
    read_codes,
    rgbe_to_float,
    save_image,
)


class TestPfm:
    def test_round_trip_exact(self, tmp_path):
        img = np.array([[1.0, 2.0], [3.0, 4.0]])
        save_image(img, tmp_path / "a.pfm")
        back = load_image(tmp_path / "a.pfm").data
        np.testing.assert_array_equal(back, img)

    def test_float32_rounding(self, tmp_path):
        img = np.random.default_rng(0).uniform(0.01, 1e4, (7, 5))
        save_image(img, tmp_path / "b.pfm")
        back = load_image(tmp_path / "b.pfm").data
        assert np.max(np.abs(back - img) / img) <= 1e-6

    def test_layout_bottom_to_top(self):
        buf = encode_pfm(np.array([[1.0, 2.0], [3.0, 4.0]]))
        assert buf.startswith(b"Pf\n2 2\n-1.0\n")
        # first stored row is the bottom row
        assert struct.unpack("<4f", buf[-16:]) == (3.0, 4.0, 1.0, 2.0)

    def test_big_endian(self):
        buf = b"Pf\n2 1\n1.0\n" + struct.pack(">2f", 5.0, 6.0)
        np.testing.assert_array_equal(decode_pfm(buf), [[5.0, 6.0]])

    def test_color_collapsed(self, tmp_path):
        rgb = np.zeros((1, 1, 3))
        rgb[0, 0] = (1.0, 1.0, 1.0)
        (tmp_path / "c.pfm").write_bytes(encode_pfm(rgb))
        assert load_image(tmp_path / "c.pfm").data[0, 0] == pytest.approx(1.0, rel=1e-7)

    @pytest.mark.parametrize(
        "buf,offset",
        [
            (b"P5\n1 1\n-1.0\n" + bytes(4), 0),
            (b"Pf\nx 1\n-1.0\n" + bytes(4), 3),
            (b"Pf\n1 0\n-1.0\n" + bytes(4), 5),
            (b"Pf\n1 1\nabc\n" + bytes(4), 7),
            (b"Pf\n2 2\n-1.0\n" + bytes(4), 16),
        ],
    )
    def test_errors_carry_offset(self, buf, offset):
        with pytest.raises(FormatError) as exc:
            decode_pfm(buf)
        assert exc.value.offset == offset


def _rle_encode_channel(vals):
    """Straightforward Radiance run-length encoder for one channel of a scanline."""
    out = bytearray()
    i, n = 0, len(vals)
    while i < n:
        j = i
        while j < n and j - i < 127 and vals[j] == vals[i]:
            j += 1
        if j - i >= 3:
            out += bytes([128 + j - i, vals[i]])
            i = j
            continue
        k = i
        while k < n and k - i < 128:
            if k + 2 < n and vals[k] == vals[k + 1] == vals[k + 2]:
                break
            k += 1
        out += bytes([k - i]) + bytes(vals[i:k])
        i = k
    return bytes(out)


def _rle_file(rgbe):
    h, w = rgbe.shape[:2]
    body = bytearray()
    for y in range(h):
        body += bytes([2, 2, w >> 8, w & 255])
        for c in range(4):
            body += _rle_encode_channel(list(rgbe[y, :, c]))
    return b"#?RADIANCE\nEXPOSURE=2.0\nFORMAT=32-bit_rle_rgbe\n\n-Y %d +X %d\n" % (h, w) + bytes(body)


class TestHdr:
    def test_rgbe_oracle(self):
        # (128 + 0.5) / 256 * 2**(129 - 128)
        got = rgbe_to_float(np.array([128, 128, 128, 129], dtype=np.uint8))
        np.testing.assert_array_equal(got, [128.5 / 128] * 3)
        assert rgbe_to_float(np.array([200, 7, 9, 0], dtype=np.uint8)).tolist() == [0.0, 0.0, 0.0]

    def test_rgbe_file_luminance(self, tmp_path):
        buf = b"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y 1 +X 1\n" + bytes([128, 128, 128, 129])
        (tmp_path / "p.hdr").write_bytes(buf)
        assert load_image(tmp_path / "p.hdr").data[0, 0] == pytest.approx(1.00390625, rel=1e-12)

    def test_rle_decoder(self):
        rng = np.random.default_rng(1)
        rgbe = rng.integers(0, 256, (5, 40, 4), dtype=np.uint8)
        rgbe[:, 10:30] = rgbe[:, 10:11]  # long runs
        rgbe[2, :, 3] = 0  # black scanline
        got = decode_hdr(_rle_file(rgbe))
        np.testing.assert_array_equal(got, rgbe_to_float(rgbe) / 2.0)

    def test_flat_round_trip(self):
        rgb = np.random.default_rng(2).uniform(0.01, 1e4, (4, 6, 3))
        got = decode_hdr(encode_hdr_flat(rgb))
        peak = rgb.max(axis=2, keepdims=True)
        assert np.max(np.abs(got - rgb) / peak) <= 1 / 128

    @pytest.mark.parametrize(
        "buf",
        [
            b"RADIANCE\n",
            b"#?RADIANCE\nFORMAT=32-bit_rle_xyze\n\n-Y 1 +X 1\n" + bytes(4),
            b"#?RADIANCE\n\n-Y 1 +X 1\n" + bytes(4),
            b"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n+Y 1 +X 1\n" + bytes(4),
            b"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\nEXPOSURE=0\n\n-Y 1 +X 1\n" + bytes(4),
            b"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y 2 +X 1\n" + bytes(4),
            b"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y 1 +X 8\n" + bytes([2, 2, 0, 9]),
        ],
    )
    def test_malformed(self, buf):
        with pytest.raises(FormatError):
            decode_hdr(buf)

    def test_write_refused(self, tmp_path):
        with pytest.raises(ConfigurationError):
            save_image(np.ones((2, 2)), tmp_path / "x.hdr")


class TestPng:
    def test_endpoints(self, tmp_path):
        (tmp_path / "w.png").write_bytes(encode_png(np.full((2, 2), 255), 8))
        assert load_image(tmp_path / "w.png").data[0, 0] == pytest.approx(300.0, rel=1e-12)
        (tmp_path / "k.png").write_bytes(encode_png(np.zeros((2, 2)), 8))
        assert load_image(tmp_path / "k.png").data[0, 0] == 5.0

    def test_i_min_constant_is_zero(self, tmp_path):
        save_image(np.full((3, 4), 5.0), tmp_path / "z.png")
        codes, r_max = read_codes(tmp_path / "z.png")
        assert r_max == 255 and (codes == 0).all()

    def test_quantization_exhaustive(self):
        d = DisplayModel()
        for bits in (8, 16):
            top = (1 << bits) - 1
            for code in range(256):
                v = code / 255
                q = quantize(np.array([v]), bits)[0]
                assert abs(q / top - v) <= 0.5 / top + 1e-15
        # every 8-bit code survives encode -> decode -> encode
        codes = np.arange(256, dtype=float).reshape(16, 16)
        lum = d.i_min + d.span * (codes / 255) ** d.gamma_display
        from nlprender.core import encode_for_display

        np.testing.assert_array_equal(quantize(encode_for_display(lum, d), 8), codes)

    def test_round_half_up(self):
        assert quantize(np.array([0.5 / 255, 1.5 / 255]), 8).tolist() == [1, 2]

    def test_sixteen_bit(self, tmp_path):
        img = np.array([[5.0, 300.0], [100.0, 42.0]])
        save_image(img, tmp_path / "s.png", bits=16)
        codes, r_max = read_codes(tmp_path / "s.png")
        assert r_max == 65535
        back = load_image(tmp_path / "s.png").data
        assert back[0, 0] == 5.0 and back[0, 1] == pytest.approx(300.0, rel=1e-12)
        assert np.max(np.abs(back - img)) < 0.05

    def test_infeasible_save(self, tmp_path):
        with pytest.raises(ConstraintViolation):
            save_image(np.array([[4.0, 100.0]]), tmp_path / "bad.png")
        with pytest.raises(ConfigurationError):
            save_image(np.full((2, 2), 10.0), tmp_path / "b.png", bits=12)

    def test_custom_display(self, tmp_path):
        d = DisplayModel(1.0, 100.0, 2.0)
        save_image(np.full((2, 2), 100.0), tmp_path / "c.png", display=d)
        assert load_image(tmp_path / "c.png", display=d).data[0, 0] == 100.0


class TestDetect:
    def test_magic_beats_extension(self, tmp_path):
        p = tmp_path / "mislabeled.png"
        p.write_bytes(encode_pfm(np.ones((1, 1))))
        assert detect_format(p) == "pfm"

    def test_unknown(self, tmp_path):
        p = tmp_path / "x.bin"
        p.write_bytes(b"\x00\x01\x02")
        with pytest.raises(FormatError):
            detect_format(p)
        with pytest.raises(ConfigurationError):
            detect_format(tmp_path / "nope.tiff")
        with pytest.raises(ConfigurationError):
            detect_format(p, "exr")
        assert detect_format(tmp_path / "nope.pfm") == "pfm"


_SEEDS = [
    encode_pfm(np.arange(6.0).reshape(2, 3)),
    encode_hdr_flat(np.ones((2, 3))),
    _rle_file(np.full((2, 9, 4), 130, dtype=np.uint8)),
    encode_png(np.arange(6).reshape(2, 3), 8),
]
_DECODERS = [decode_pfm, decode_hdr, decode_hdr, decode_png]


@settings(max_examples=300, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(
    st.integers(0, len(_SEEDS) - 1),
    st.lists(st.tuples(st.integers(0, 10_000), st.integers(0, 255)), max_size=6),
    st.integers(0, 10_000),
)
def test_fuzzed_headers_raise_format_error(which, edits, cut):
    buf = bytearray(_SEEDS[which])
    for pos, val in edits:
        buf[pos % len(buf)] = val
    buf = bytes(buf[: max(1, cut % (len(buf) + 1))])
    try:
        _DECODERS[which](buf)
    except FormatError:
        pass

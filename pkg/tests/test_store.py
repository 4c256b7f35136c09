import numpy as np
import pytest

from fedt.errors import ModelChecksumError, ModelFormatError, ModelTruncatedError
from fedt.store import decode_windows, encode_windows, load_windows, save_windows


class TestWindowsContainer:
    def test_round_trip_lossless(self, small_windows, tmp_path):
        path = tmp_path / "windows.bin"
        header = {"window_size": 100, "stride": 50, "adapter": "synthetic"}
        save_windows(small_windows, path, header)
        again, loaded_header = load_windows(path)
        assert loaded_header["window_size"] == 100
        assert loaded_header["count"] == len(small_windows)
        assert len(again) == len(small_windows)
        for a, b in zip(small_windows, again):
            np.testing.assert_array_equal(a.samples, b.samples)
            assert a.label == b.label
            assert a.origin == b.origin

    def test_deterministic_bytes(self, small_windows):
        a = encode_windows(small_windows, {"k": 1})
        b = encode_windows(small_windows, {"k": 1})
        assert a == b

    def test_truncation(self, small_windows):
        blob = encode_windows(small_windows[:5], {})
        with pytest.raises((ModelTruncatedError, ModelFormatError)):
            decode_windows(blob[: len(blob) // 2])

    def test_corruption_detected(self, small_windows):
        blob = bytearray(encode_windows(small_windows[:5], {}))
        blob[len(blob) // 2] ^= 0x10
        with pytest.raises((ModelChecksumError, ModelFormatError)):
            decode_windows(bytes(blob))

    def test_bad_magic(self):
        with pytest.raises(ModelFormatError):
            decode_windows(b"NOTWINDO" + b"\x00" * 40)

    def test_unlabeled_windows_preserved(self, small_windows):
        from dataclasses import replace

        unlabeled = [replace(small_windows[0], label=None)]
        again, _ = decode_windows(encode_windows(unlabeled, {}))
        assert again[0].label is None

    def test_atomic_write_leaves_no_partial_file(self, small_windows, tmp_path, monkeypatch):
        import fedt.ioutil as ioutil

        path = tmp_path / "windows.bin"
        original = ioutil.os.replace

        def boom(src, dst):
            raise RuntimeError("simulated crash")

        monkeypatch.setattr(ioutil.os, "replace", boom)
        with pytest.raises(RuntimeError):
            save_windows(small_windows[:3], path, {})
        monkeypatch.setattr(ioutil.os, "replace", original)
        assert not path.exists()
        assert list(tmp_path.iterdir()) == []  # temp file cleaned up

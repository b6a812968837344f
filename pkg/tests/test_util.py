import logging
import numpy as np
import pytest

from nf4lut import FileUtil, JsonUtil, Timer, LogConfigLoader, RawArrayError


class TestFileUtil:
    def test_check_path_creates_directories(self, tmp_path):
        filepath = tmp_path / "a" / "b" / "c.bin"
        assert FileUtil.check_path(str(filepath)) is False
        assert (tmp_path / "a" / "b").is_dir()
        assert not filepath.exists()

    def test_check_path_without_create(self, tmp_path):
        assert FileUtil.check_path(str(tmp_path / "x" / "y.bin"), auto_create=False) is False
        assert not (tmp_path / "x").exists()

    def test_file_size(self, tmp_path):
        filepath = tmp_path / "f.bin"
        filepath.write_bytes(b"\x00" * 2048)
        assert FileUtil.get_file_size(str(filepath)) == 2048
        assert FileUtil.get_file_size(str(filepath), "kb") == 2
        with pytest.raises(ValueError):
            FileUtil.get_file_size(str(filepath), "tb")
        with pytest.raises(FileNotFoundError):
            FileUtil.get_file_size(str(tmp_path / "missing"))

    def test_raw_array_roundtrip(self, tmp_path, normal_values):
        filepath = str(tmp_path / "raw" / "v.f32")
        assert FileUtil.write_raw_array(normal_values, filepath) == 4 * len(normal_values)
        assert np.array_equal(FileUtil.read_raw_array(filepath), normal_values)
        assert np.array_equal(FileUtil.read_raw_array(filepath, count=10), normal_values[:10])

    def test_raw_array_errors(self, tmp_path):
        filepath = tmp_path / "v.f32"
        filepath.write_bytes(b"\x00" * 10)
        with pytest.raises(RawArrayError):
            FileUtil.read_raw_array(str(filepath))
        with pytest.raises(RawArrayError):
            FileUtil.read_raw_array(str(filepath), count=3)
        assert len(FileUtil.read_raw_array(str(filepath), count=2)) == 2


class TestJsonUtil:
    def test_roundtrip(self, tmp_path):
        filepath = JsonUtil.save_json({"workers": 2}, str(tmp_path / "cfg"))
        assert filepath.endswith("cfg.json")
        assert JsonUtil.load_json(filepath) == {"workers": 2}

    def test_empty_and_missing(self, tmp_path):
        empty = tmp_path / "empty.json"
        empty.write_text("")
        assert JsonUtil.load_json(str(empty)) == {}
        with pytest.raises(FileNotFoundError):
            JsonUtil.load_json(str(tmp_path / "missing.json"))


class TestTimer:
    def test_elapsed(self):
        timer = Timer()
        assert timer.get_elapsed() >= 0
        assert timer.get_elapsed("milliseconds") >= 0
        with pytest.raises(ValueError):
            timer.get_elapsed("hours")

    def test_formatted(self):
        timer = Timer()
        assert timer.get_elapsed_formatted() == "0:00:00"
        assert timer.get_elapsed_formatted("milliseconds").startswith("0s:")

    def test_print_elapsed(self, caplog):
        with caplog.at_level(logging.INFO, logger="nf4lut.util.Timer"):
            Timer().print_elapsed_time(prefix="took ")
        assert "took 0s:" in caplog.text


class TestLogConfigLoader:
    def test_level_override(self):
        root = logging.getLogger()
        handlers, level = list(root.handlers), root.level
        try:
            LogConfigLoader.setup_logging_config(level="debug")
            assert root.level == logging.DEBUG
            LogConfigLoader.setup_logging_config()
            assert root.level == logging.WARNING
        finally:
            root.handlers[:] = handlers
            root.setLevel(level)

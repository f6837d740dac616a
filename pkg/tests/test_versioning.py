"""Tests for run records."""

from dataclasses import replace

from app import __version__
from app.config import AppConfig
from app.ops.versioning import compute_hash, config_fingerprint, create_run_record, hash_inputs


class TestComputeHash:
    """Test hashing."""

    def test_length(self):
        """Hashes should be 16 hex characters."""
        assert len(compute_hash("abc")) == 16
        int(compute_hash({"a": 1}), 16)

    def test_key_order(self):
        """Dict key order should not matter."""
        assert compute_hash({"a": 1, "b": 2}) == compute_hash({"b": 2, "a": 1})


class TestHashInputs:
    """Test input hashing."""

    def test_content_sensitive(self, tmp_path):
        """Changing a file should change the hash."""
        path = tmp_path / "in.json"
        path.write_text("{}")
        before = hash_inputs([path])
        path.write_text('{"a": 1}')
        assert hash_inputs([path]) != before

    def test_missing_file(self, tmp_path):
        """An unreadable file should still hash."""
        assert len(hash_inputs([tmp_path / "missing.json"])) == 16


class TestRunRecord:
    """Test run records."""

    def test_fields(self, tmp_path):
        """The record should carry the command, seed and version."""
        path = tmp_path / "in.json"
        path.write_text("{}")
        record = create_run_record("compat", [path], AppConfig(seed=7))
        assert record.command == "compat"
        assert record.seed == 7
        assert record.app_version == __version__
        assert set(record.to_json()) == {"command", "input_hash", "config_hash", "seed", "app_version"}

    def test_config_sensitive(self):
        """Tolerance changes should change the config hash."""
        base = AppConfig()
        changed = replace(base, tolerances=base.tolerances.with_overall(1e-6))
        assert create_run_record("x", [], base).config_hash != create_run_record("x", [], changed).config_hash

    def test_output_dir_ignored(self, tmp_path):
        """Paths and log level should not enter the fingerprint."""
        a = AppConfig(output_dir=tmp_path, log_level="DEBUG")
        assert config_fingerprint(a) == config_fingerprint(AppConfig())

    def test_repeatable(self, tmp_path):
        """The same inputs and config should give the same record."""
        path = tmp_path / "in.json"
        path.write_text("{}")
        first = create_run_record("marginal", [path], AppConfig(), {"free": "2-ext"})
        second = create_run_record("marginal", [path], AppConfig(), {"free": "2-ext"})
        assert first == second

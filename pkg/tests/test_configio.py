import pytest

from reluprobe import ConfigError
from reluprobe.configio import (GEN_SCHEMA, TRAIN_SCHEMA, apply_schema,
                                format_config, parse_text)


class TestParse:
    def test_basic_parse_with_comments(self):
        raw = parse_text("""
        # a comment
        kind = linear-margin
        n = 10   # trailing comment
        dim = 3
        """)
        assert raw == {"kind": "linear-margin", "n": "10", "dim": "3"}

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_text("a = 1\na = 2")

    def test_missing_equals_rejected(self):
        with pytest.raises(ConfigError, match="key = value"):
            parse_text("just some text")


class TestSchema:
    def _gen_raw(self, **overrides):
        raw = {"config_version": "1", "kind": "linear-margin", "n": "10",
               "dim": "4", "margin": "0.1"}
        raw.update(overrides)
        return raw

    def test_happy_path_types(self):
        cfg = apply_schema(self._gen_raw(), GEN_SCHEMA)
        assert cfg["n"] == 10 and cfg["margin"] == 0.1
        assert cfg["test_n"] == 0  # default applied

    def test_unknown_field_named(self):
        with pytest.raises(ConfigError, match="mystery"):
            apply_schema(self._gen_raw(mystery="1"), GEN_SCHEMA)

    def test_invalid_choice_names_field(self):
        with pytest.raises(ConfigError, match="'kind'"):
            apply_schema(self._gen_raw(kind="nonsense"), GEN_SCHEMA)

    def test_unparseable_value_names_field(self):
        with pytest.raises(ConfigError, match="'n'"):
            apply_schema(self._gen_raw(n="ten"), GEN_SCHEMA)

    def test_missing_required_named(self):
        raw = self._gen_raw()
        del raw["dim"]
        with pytest.raises(ConfigError, match="'dim'"):
            apply_schema(raw, GEN_SCHEMA)

    def test_version_enforced(self):
        with pytest.raises(ConfigError, match="config_version"):
            apply_schema(self._gen_raw(config_version="2"), GEN_SCHEMA)

    def test_list_fields(self):
        raw = {"config_version": "1", "dataset": "d.csv", "depth": "2",
               "width": "8", "step_size": "0.5", "iterations": "3"}
        cfg = apply_schema(raw, TRAIN_SCHEMA)
        assert cfg["record_every"] == 1


class TestFormat:
    def test_round_trip_through_text(self):
        cfg = apply_schema(self._raw(), GEN_SCHEMA)
        text = format_config(cfg)
        again = apply_schema(parse_text(text), GEN_SCHEMA)
        assert again == cfg
        assert format_config(again) == text

    def _raw(self):
        return {"config_version": "1", "kind": "random-relu-teacher", "n": "10",
                "dim": "4", "margin": "0.125", "teacher_features": "16",
                "seed": "7"}

    def test_floats_use_17_digits(self):
        text = format_config({"config_version": 1, "x": 0.1})
        assert "0.10000000000000001" in text

import pytest

from hmfx.config import DEFAULTS, RunConfig, parse_config
from hmfx.errors import ConfigError


class TestParser:
    def test_sections_flatten(self):
        cfg = parse_config("[grid]\nr_max = 20\n[tol]\nshoot = 1e-6\n")
        assert cfg == {"grid.r_max": "20", "tol.shoot": "1e-6"}

    def test_default_section_is_run(self):
        assert parse_config("n = 4") == {"run.n": "4"}

    def test_comments_and_blanks(self):
        cfg = parse_config("# header\n\nn = 3  # trailing\n")
        assert cfg == {"run.n": "3"}

    def test_bad_line_raises(self):
        with pytest.raises(ConfigError):
            parse_config("this is not a pair")

    def test_empty_section_raises(self):
        with pytest.raises(ConfigError):
            parse_config("[]\na = 1")


class TestRunConfig:
    def test_defaults_cover_all_keys(self):
        cfg = RunConfig({})
        for key in DEFAULTS:
            assert cfg.raw(key) == DEFAULTS[key]

    def test_explicit_overrides_default(self):
        cfg = RunConfig({"run.n": "5"})
        assert cfg.get_int("run.n") == 5

    def test_missing_key_without_default(self):
        with pytest.raises(ConfigError):
            RunConfig({}).raw("run.h_inf")

    def test_typed_accessors(self):
        cfg = RunConfig({"run.K_ladder": "1, 10, 100"})
        assert cfg.get_floats("run.K_ladder") == [1.0, 10.0, 100.0]
        with pytest.raises(ConfigError):
            RunConfig({"run.n": "abc"}).get_int("run.n")

    def test_tolerance_profiles_scale(self):
        base = RunConfig({}).get_tolerance("tol.picard")
        strict = RunConfig({}, "strict").get_tolerance("tol.picard")
        loose = RunConfig({}, "loose").get_tolerance("tol.picard")
        assert strict == pytest.approx(0.5 * base)
        assert loose == pytest.approx(2.0 * base)

    def test_unknown_profile_rejected(self):
        with pytest.raises(ConfigError):
            RunConfig({}, "fastest")

    def test_echo_is_verbatim_and_sorted(self):
        cfg = RunConfig({"run.n": "5", "grid.r_max": "12"})
        assert cfg.echo() == {"grid.r_max": "12", "run.n": "5"}

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            RunConfig.load(tmp_path / "nope.cfg")

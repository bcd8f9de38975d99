import pytest

from fracshe.config import (
    DEFAULT_OUTPUT_DIR,
    apply_overrides,
    config_digest,
    parse_config,
    serialize_config,
)
from fracshe.utils import ConfigError


MINIMAL_CONFIG = """
[model]
beta = 0.5
lambda_level = 1.0
length = 3.141592653589793
n_modes = 64

[grid]
n_cells = 16
dt = 0.05
t_final = 1.0

[mc]
replicas = 8
seed = 42

[experiment]
kind = lambda-profile
"""

BUMP_CONFIG = MINIMAL_CONFIG.replace(
    "n_modes = 64\n", "n_modes = 64\nu0_kind = bump\nu0_center = 1.5\nu0_half_width = 0.5\n"
)


def violations_of(text, kind=None):
    with pytest.raises(ConfigError) as err:
        parse_config(text, kind=kind)
    return err.value.violations


class TestParseConfig:
    def test_minimal(self):
        config = parse_config(MINIMAL_CONFIG)
        assert config.model.beta == 0.5
        assert config.model.domain.n_modes == 64
        assert config.model.u0.kind == "mode"
        assert config.grid.n_steps == 20
        assert config.mc.seed == 42
        assert config.policy.series_cutoff == 5.0
        assert config.experiment.kind == "lambda-profile"
        assert config.experiment.get("betas") == ()
        assert config.output_dir == DEFAULT_OUTPUT_DIR

    def test_round_trip(self):
        config = parse_config(MINIMAL_CONFIG)
        again = parse_config(serialize_config(config))
        assert again == config
        assert serialize_config(again) == serialize_config(config)

    def test_round_trip_bump(self):
        config = parse_config(BUMP_CONFIG)
        assert config.model.u0.kind == "bump"
        assert parse_config(serialize_config(config)) == config

    def test_beta_out_of_range(self):
        problems = violations_of(MINIMAL_CONFIG.replace("beta = 0.5", "beta = 1.5"))
        assert problems == ["model.beta must lie in (0, 1], got 1.5"]

    def test_missing_seed(self):
        problems = violations_of(MINIMAL_CONFIG.replace("seed = 42\n", ""))
        assert "mc.seed required" in problems

    def test_unknown_key(self):
        problems = violations_of(MINIMAL_CONFIG.replace("n_cells = 16", "n_cells = 16\nn_celss = 16"))
        assert problems == ["grid.n_celss unknown key"]

    def test_unknown_section(self):
        problems = violations_of(MINIMAL_CONFIG + "\n[plot]\ndpi = 300\n")
        assert "[plot] unknown section" in problems

    def test_every_violation_listed(self):
        text = MINIMAL_CONFIG.replace("beta = 0.5", "beta = 0").replace("dt = 0.05", "dt = fast")
        text = text.replace("replicas = 8", "replicas = 0")
        problems = violations_of(text)
        assert len(problems) == 3
        assert any(problem.startswith("model.beta") for problem in problems)
        assert "grid.dt must be a number, got 'fast'" in problems
        assert any(problem.startswith("mc.replicas") for problem in problems)

    def test_u0_key_for_other_kind(self):
        problems = violations_of(MINIMAL_CONFIG.replace("n_modes = 64", "n_modes = 64\nu0_center = 1.0"))
        assert problems == ["model.u0_center does not apply to u0_kind 'mode'"]

    def test_eval_section(self):
        config = parse_config(MINIMAL_CONFIG + "\n[eval]\nkernel_abs_tol = 0.01\n")
        assert config.policy.kernel_abs_tol == 0.01
        problems = violations_of(MINIMAL_CONFIG + "\n[eval]\nseries_cutoff = 80\n")
        assert any("series_cutoff" in problem for problem in problems)

    def test_experiment_parameters(self):
        text = MINIMAL_CONFIG + "thetas = 0.1, 0.01\nbetas = 0.5, 0.75\n"
        config = parse_config(text)
        assert config.experiment.get("thetas") == (0.1, 0.01)
        assert config.experiment.get("betas") == (0.5, 0.75)

    def test_kind_from_command_line(self):
        text = MINIMAL_CONFIG.replace("kind = lambda-profile\n", "")
        assert parse_config(text, kind="ml-eval").experiment.kind == "ml-eval"
        assert violations_of(text) == ["experiment.kind required"]

    def test_kind_mismatch(self):
        problems = violations_of(MINIMAL_CONFIG, kind="simulate")
        assert problems == ["experiment.kind 'lambda-profile' does not match subcommand 'simulate'"]

    def test_unknown_kind(self):
        problems = violations_of(MINIMAL_CONFIG.replace("kind = lambda-profile", "kind = plot"))
        assert len(problems) == 1
        assert problems[0].startswith("experiment.kind must be one of")

    def test_malformed(self):
        assert violations_of("beta = 0.5")[0].startswith("malformed configuration")


class TestDigest:
    def setup_method(self):
        self.config = parse_config(MINIMAL_CONFIG)

    def test_stable(self):
        assert config_digest(self.config) == config_digest(parse_config(MINIMAL_CONFIG))
        assert len(config_digest(self.config)) == 64

    def test_reordered_document(self):
        text = MINIMAL_CONFIG.replace("beta = 0.5\nlambda_level = 1.0", "lambda_level = 1.0\nbeta = 0.5")
        assert config_digest(parse_config(text)) == config_digest(self.config)

    @pytest.mark.parametrize(
        "old, new",
        [
            ("beta = 0.5", "beta = 0.6"),
            ("seed = 42", "seed = 43"),
            ("n_cells = 16", "n_cells = 32"),
            ("kind = lambda-profile", "kind = lambda-profile\nthetas = 0.5"),
        ],
    )
    def test_changes_with_any_field(self, old, new):
        assert config_digest(parse_config(MINIMAL_CONFIG.replace(old, new))) != config_digest(self.config)


class TestOverrides:
    def setup_method(self):
        self.config = parse_config(MINIMAL_CONFIG)

    def test_overrides(self):
        config = apply_overrides(self.config, seed=7, replicas=3, output_dir="elsewhere")
        assert config.mc.seed == 7
        assert config.mc.replicas == 3
        assert config.output_dir == "elsewhere"
        assert config.model == self.config.model

    def test_no_overrides(self):
        assert apply_overrides(self.config) == self.config

    def test_invalid_override(self):
        with pytest.raises(ConfigError, match="mc.replicas"):
            apply_overrides(self.config, replicas=0)

    def test_seed_changes_digest(self):
        assert config_digest(apply_overrides(self.config, seed=43)) != config_digest(self.config)

"""
Experiment configuration: an INI document with sections [model], [grid], [mc], [eval], [experiment] and [output]

parse_config collects every violation before raising; serialize_config writes the canonical form that
config_digest hashes.
"""

import configparser
import dataclasses
import hashlib
import logging
from dataclasses import dataclass

from fracshe.experiment import float_list
from fracshe.experiments import EXPERIMENTS
from fracshe.noise import GridSpec
from fracshe.sde import ModelSpec, SigmaSpec
from fracshe.special_fn import EvalPolicy
from fracshe.spectral_kernel import DomainSpec, InitialCondition
from fracshe.utils import ConfigError, DomainError

logger = logging.getLogger(__name__)

SECTION_ORDER = ("model", "grid", "mc", "eval", "experiment", "output")
DEFAULT_OUTPUT_DIR = "results"
MAX_SEED = 2**64 - 1

REQUIRED = {
    "model": ("beta", "lambda_level", "length", "n_modes"),
    "grid": ("n_cells", "dt", "t_final"),
    "mc": ("replicas", "seed"),
    "experiment": ("kind",),
}

# key -> (parser, default); None default means required
MODEL_KEYS = {
    "beta": (float, None),
    "lambda_level": (float, None),
    "length": (float, None),
    "n_modes": (int, None),
    "sigma_kind": (str, "linear"),
    "sigma_c": (float, 1.0),
    "u0_kind": (str, "mode"),
}

# u0 keys each initial-condition kind accepts, with defaults
U0_KEYS = {
    "mode": {"u0_mode": (int, 1), "u0_amplitude": (float, 1.0)},
    "bump": {"u0_center": (float, None), "u0_half_width": (float, None), "u0_height": (float, 1.0)},
    "tabulated": {"u0_values": (float_list, None)},
}
ALL_U0_KEYS = {key for keys in U0_KEYS.values() for key in keys}

GRID_KEYS = {"n_cells": (int, None), "dt": (float, None), "t_final": (float, None)}
MC_KEYS = {"replicas": (int, None), "seed": (int, None)}


@dataclass(frozen=True)
class MonteCarloSpec:
    replicas: int
    seed: int

    def violations(self):
        problems = []
        if self.replicas < 1:
            problems.append(f"mc.replicas must be >= 1, got {self.replicas!r}")
        if not 0 <= self.seed <= MAX_SEED:
            problems.append(f"mc.seed must lie in [0, 2^64 - 1], got {self.seed!r}")
        return problems


@dataclass(frozen=True)
class ExperimentSpec:
    """kind plus its resolved parameters as sorted (name, value) pairs"""

    kind: str
    params: tuple = ()

    def get(self, name):
        return dict(self.params)[name]


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelSpec
    grid: GridSpec
    mc: MonteCarloSpec
    policy: EvalPolicy
    experiment: ExperimentSpec
    output_dir: str = DEFAULT_OUTPUT_DIR


class _Section:
    """Reads typed keys from one parsed section, recording problems instead of raising."""

    def __init__(self, name, items, violations):
        self.name = name
        self.items = dict(items)
        self.violations = violations
        self.used = set()

    def read(self, key, parse, default=None, required=False):
        self.used.add(key)
        if key not in self.items:
            if required:
                self.violations.append(f"{self.name}.{key} required")
            return default
        raw = self.items[key].strip()
        try:
            return parse(raw)
        except (TypeError, ValueError):
            kind = getattr(parse, "__name__", "value")
            self.violations.append(f"{self.name}.{key} must be {_describe(kind)}, got {raw!r}")
            return default

    def reject_unknown(self):
        for key in sorted(set(self.items) - self.used):
            self.violations.append(f"{self.name}.{key} unknown key")


def _describe(kind):
    return {"float": "a number", "int": "an integer", "float_list": "a comma separated list of numbers"}.get(
        kind, f"a valid {kind}"
    )


def _build(violations, cls, **kwargs):
    if any(value is None for value in kwargs.values()):
        return None
    try:
        return cls(**kwargs)
    except DomainError as err:
        violations.extend(str(err).split("; "))
        return None


def _read_u0(section, kind, violations):
    if kind not in U0_KEYS:
        violations.append(f"model.u0_kind must be one of mode, bump, tabulated, got {kind!r}")
        return None
    for key in sorted(ALL_U0_KEYS - set(U0_KEYS[kind])):
        if key in section.items:
            section.used.add(key)
            violations.append(f"model.{key} does not apply to u0_kind {kind!r}")
    spec = U0_KEYS[kind]
    if kind == "mode":
        return InitialCondition.mode_k(
            section.read("u0_mode", int, spec["u0_mode"][1]), section.read("u0_amplitude", float, 1.0)
        )
    if kind == "bump":
        center = section.read("u0_center", float, required=True)
        half_width = section.read("u0_half_width", float, required=True)
        height = section.read("u0_height", float, 1.0)
        if center is None or half_width is None:
            return None
        return InitialCondition.bump(center, half_width, height)
    values = section.read("u0_values", float_list, required=True)
    return None if values is None else InitialCondition.tabulated(values)


def parse_config(text, kind=None):
    """
    Parse and validate an experiment configuration

    :param text: INI document
    :param kind: experiment kind from the command line; fills a missing experiment.kind and must match a present one
    :return: ExperimentConfig
    :raises ConfigError: listing every violation found
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as err:
        raise ConfigError([f"malformed configuration: {err}"]) from err

    violations = []
    if parser.defaults():
        violations.append("[DEFAULT] section is not supported")
    for name in parser.sections():
        if name not in SECTION_ORDER:
            violations.append(f"[{name}] unknown section")
    sections = {
        name: _Section(name, parser.items(name) if parser.has_section(name) else (), violations)
        for name in SECTION_ORDER
    }

    # model
    model_section = sections["model"]
    fields = {
        key: model_section.read(key, parse, default, required=key in REQUIRED["model"])
        for key, (parse, default) in MODEL_KEYS.items()
    }
    u0 = _read_u0(model_section, fields["u0_kind"], violations)
    domain = _build(violations, DomainSpec, length_L=fields["length"], n_modes=fields["n_modes"])
    sigma = _build(violations, SigmaSpec, kind=fields["sigma_kind"], c=fields["sigma_c"])
    model = None
    if domain is not None and sigma is not None and u0 is not None:
        model = _build(
            violations,
            ModelSpec,
            beta=fields["beta"],
            lambda_level=fields["lambda_level"],
            domain=domain,
            sigma=sigma,
            u0=u0,
        )

    # grid and mc
    grid_fields = {key: sections["grid"].read(key, parse, required=True) for key, (parse, _) in GRID_KEYS.items()}
    grid = _build(violations, GridSpec, **grid_fields)
    mc_fields = {key: sections["mc"].read(key, parse, required=True) for key, (parse, _) in MC_KEYS.items()}
    mc = None
    if None not in mc_fields.values():
        mc = MonteCarloSpec(**mc_fields)
        violations.extend(mc.violations())

    # eval
    defaults = EvalPolicy()
    eval_fields = {
        name: sections["eval"].read(name, type(getattr(defaults, name)), getattr(defaults, name))
        for name in EvalPolicy.field_names()
    }
    policy = _build(violations, EvalPolicy, **eval_fields)

    # experiment
    experiment = _read_experiment(sections["experiment"], kind, violations)

    output_dir = sections["output"].read("dir", str, DEFAULT_OUTPUT_DIR)

    for section in sections.values():
        section.reject_unknown()
    if violations:
        raise ConfigError(violations)
    return ExperimentConfig(model, grid, mc, policy, experiment, output_dir)


def _read_experiment(section, kind, violations):
    file_kind = section.read("kind", str)
    if file_kind is None and kind is None:
        violations.append("experiment.kind required")
        return None
    if file_kind is not None and kind is not None and file_kind != kind:
        violations.append(f"experiment.kind {file_kind!r} does not match subcommand {kind!r}")
        return None
    kind = file_kind or kind
    if kind not in EXPERIMENTS:
        violations.append(f"experiment.kind must be one of {', '.join(sorted(EXPERIMENTS))}, got {kind!r}")
        return None
    params = []
    for parameter in EXPERIMENTS[kind].parameters:
        params.append((parameter.name, section.read(parameter.name, parameter.parse, parameter.default)))
    return ExperimentSpec(kind=kind, params=tuple(sorted(params)))


# {{{ canonical form


def _render(value):
    if isinstance(value, tuple):
        return ", ".join(_render(item) for item in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _model_items(model):
    items = {
        "beta": model.beta,
        "lambda_level": model.lambda_level,
        "length": model.domain.length_L,
        "n_modes": model.domain.n_modes,
        "sigma_kind": model.sigma.kind,
        "sigma_c": model.sigma.c,
        "u0_kind": model.u0.kind,
    }
    u0 = model.u0
    if u0.kind == "mode":
        items.update(u0_mode=u0.mode, u0_amplitude=u0.amplitude)
    elif u0.kind == "bump":
        items.update(u0_center=u0.center, u0_half_width=u0.half_width, u0_height=u0.height)
    else:
        items.update(u0_values=u0.values)
    return items


def serialize_config(config):
    """
    Canonical text: fixed section order, sorted keys, floats by repr
    """
    sections = {
        "model": _model_items(config.model),
        "grid": dataclasses.asdict(config.grid),
        "mc": dataclasses.asdict(config.mc),
        "eval": dataclasses.asdict(config.policy),
        "experiment": dict(config.experiment.params, kind=config.experiment.kind),
        "output": {"dir": config.output_dir},
    }
    lines = []
    for name in SECTION_ORDER:
        lines.append(f"[{name}]")
        for key in sorted(sections[name]):
            lines.append(f"{key} = {_render(sections[name][key])}")
        lines.append("")
    return "\n".join(lines)


def config_digest(config):
    """SHA-256 hex digest of the canonical serialization."""
    return hashlib.sha256(serialize_config(config).encode("utf-8")).hexdigest()


# }}}


def apply_overrides(config, seed=None, replicas=None, output_dir=None):
    """
    Command-line overrides for mc.seed, mc.replicas and output.dir, validated like file values
    """
    mc = config.mc
    if seed is not None:
        mc = dataclasses.replace(mc, seed=int(seed))
    if replicas is not None:
        mc = dataclasses.replace(mc, replicas=int(replicas))
    problems = mc.violations()
    if problems:
        raise ConfigError(problems)
    output_dir = config.output_dir if output_dir is None else str(output_dir)
    return dataclasses.replace(config, mc=mc, output_dir=output_dir)

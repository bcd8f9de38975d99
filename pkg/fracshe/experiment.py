"""
experiment.py
"""

from typing import Callable, NamedTuple


def float_list(text):
    """Comma separated floats, e.g. '0.7, 0.8, 0.9'. An empty value gives an empty tuple."""
    items = [item.strip() for item in str(text).split(",") if item.strip()]
    return tuple(float(item) for item in items)


class Parameter(NamedTuple):
    name: str
    parse: Callable
    default: object


class Experiment:
    """
    One kind of run. Subclasses set experiment_type (the subcommand / experiment.kind name), the parameters they read
    from the [experiment] section, and the CSV files they write with their columns.
    """

    experiment_type = "GenericExperiment"
    parameters = ()
    outputs = {}

    def __init__(self, config):
        self.config = config
        self.params = dict(config.experiment.params)
        self.aborted = 0

    @property
    def model(self):
        return self.config.model

    @property
    def grid(self):
        return self.config.grid

    @property
    def policy(self):
        return self.config.policy

    @property
    def mc(self):
        return self.config.mc

    def execute(self, writer):
        """
        Run and write every file named in outputs through writer(file_name, rows)
        """
        raise NotImplementedError

    @classmethod
    def describe_outputs(cls):
        return "; ".join(f"{name}: {','.join(columns)}" for name, columns in cls.outputs.items())

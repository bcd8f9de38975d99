"""
simulate: one replica of the mild scheme, written as (t, x, value) rows
"""

from fracshe.experiment import Experiment, Parameter
from fracshe.noise import sample_noise
from fracshe.sde import simulate
from fracshe.utils import BlowUpError


class Simulate(Experiment):
    experiment_type = "simulate"
    parameters = (Parameter("replica", int, 0),)
    outputs = {"path.csv": ("t", "x", "value")}

    def execute(self, writer):
        noise = sample_noise(self.grid, self.mc.seed, self.params["replica"], self.model.length)
        try:
            path = simulate(self.model, self.grid, noise, self.policy)
        except BlowUpError:
            self.aborted = 1
            raise
        nodes = path.nodes
        writer(
            "path.csv",
            ((t, x, value) for t, row in zip(path.times, path.values) for x, value in zip(nodes, row)),
        )

"""
continuity: increment moments over dyadic shifts and the fitted modulus (a, b, K)
"""

from fracshe.experiment import Experiment, Parameter
from fracshe.moments import continuity_modulus


class Continuity(Experiment):
    experiment_type = "continuity"
    parameters = (Parameter("p", int, 2),)
    outputs = {
        "increments.csv": ("which", "shift", "moment"),
        "fit.csv": ("beta", "p", "a", "b", "K"),
    }

    def execute(self, writer):
        fit = continuity_modulus(self.model, self.grid, self.mc.replicas, self.params["p"], self.mc.seed, self.policy)
        self.aborted = fit.aborted
        rows = [("space", shift, moment) for shift, moment in zip(fit.space_shifts, fit.space_moments)]
        rows += [("time", shift, moment) for shift, moment in zip(fit.time_shifts, fit.time_moments)]
        writer("increments.csv", rows)
        writer("fit.csv", [(fit.beta, fit.p, fit.a, fit.b, fit.K)])

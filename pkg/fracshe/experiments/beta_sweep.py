"""
beta-sweep: common-noise gaps between the beta = 1 solution and the fractional solutions
"""

from fracshe.experiment import Experiment, Parameter, float_list
from fracshe.moments import beta_convergence


class BetaSweep(Experiment):
    experiment_type = "beta-sweep"
    parameters = (
        Parameter("betas", float_list, (0.7, 0.8, 0.9, 0.95, 0.99)),
        Parameter("p", int, 2),
    )
    outputs = {"beta_sweep.csv": ("beta", "p", "sup_moment_gap")}

    def execute(self, writer):
        report = beta_convergence(
            self.model,
            self.params["betas"],
            self.grid,
            self.params["p"],
            self.mc.replicas,
            self.mc.seed,
            self.policy,
        )
        self.aborted = report.aborted
        rows = ((beta, report.p, gap) for beta, gap in zip(report.beta_values, report.sup_moment_gap))
        writer("beta_sweep.csv", rows)

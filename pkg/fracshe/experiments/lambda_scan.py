"""
lambda-scan: geometric bisection for the noise level where sup_x E|u_t(x)|^2 starts to grow exponentially
"""

from fracshe.experiment import Experiment, Parameter
from fracshe.moments import lambda_transition


class LambdaScan(Experiment):
    experiment_type = "lambda-scan"
    parameters = (
        Parameter("lambda_lo", float, 0.05),
        Parameter("lambda_hi", float, 5.0),
        Parameter("iterations", int, 6),
    )
    outputs = {"lambda_scan.csv": ("iteration", "lambda", "slope", "ci_halfwidth", "grows")}

    def execute(self, writer):
        scan = lambda_transition(
            self.model,
            self.grid,
            self.params["lambda_lo"],
            self.params["lambda_hi"],
            self.mc.replicas,
            self.mc.seed,
            self.params["iterations"],
            self.policy,
        )
        self.aborted = scan.aborted
        rows = [
            (probe.iteration, probe.lambda_level, probe.slope, probe.ci_halfwidth, probe.grows) for probe in scan.probes
        ]
        writer("lambda_scan.csv", rows)

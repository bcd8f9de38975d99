"""
lambda-profile: Lambda(theta) for lambda_1 = (pi/L)^2
"""

from fracshe.experiment import Experiment, Parameter, float_list
from fracshe.moments import lambda_profile
from fracshe.spectral_kernel import build_basis


class LambdaProfile(Experiment):
    experiment_type = "lambda-profile"
    parameters = (
        Parameter("thetas", float_list, (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)),
        # empty: use model.beta
        Parameter("betas", float_list, ()),
    )
    outputs = {"lambda_profile.csv": ("beta", "lambda1", "theta", "Lambda")}

    def execute(self, writer):
        lambda_1 = float(build_basis(self.model.domain).eigenvalues[0])
        betas = self.params["betas"] or (self.model.beta,)
        rows = [
            (beta, lambda_1, theta, lambda_profile(beta, lambda_1, theta, self.policy))
            for beta in betas
            for theta in self.params["thetas"]
        ]
        writer("lambda_profile.csv", rows)

"""
ml-eval: pointwise E_beta(-x), its two-sided bound and g_beta(x) on a log-spaced grid
"""

import math

import numpy as np

from fracshe.experiment import Experiment, Parameter, float_list
from fracshe.special_fn import ml_bounds, ml_neg, stable_density


class MlEval(Experiment):
    experiment_type = "ml-eval"
    parameters = (
        Parameter("betas", float_list, (0.25, 0.5, 0.75, 1.0)),
        Parameter("x_min", float, 1e-3),
        Parameter("x_max", float, 1e3),
        Parameter("n_points", int, 40),
    )
    outputs = {"ml_eval.csv": ("beta", "x", "ml_neg", "lower_bound", "upper_bound", "stable_density")}

    def execute(self, writer):
        xs = np.logspace(math.log10(self.params["x_min"]), math.log10(self.params["x_max"]), self.params["n_points"])
        rows = []
        for beta in self.params["betas"]:
            values = ml_neg(beta, xs, self.policy)
            lower, upper = ml_bounds(beta, xs)
            for x, value, lo, hi in zip(xs, values, lower, upper):
                # g_beta only exists for beta < 1
                density = stable_density(beta, x, self.policy) if beta < 1.0 else math.nan
                rows.append((beta, x, value, lo, hi, density))
        writer("ml_eval.csv", rows)

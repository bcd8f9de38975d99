"""
kernel: G_D (p_D for beta = 1) on an evenly spaced (x, y) grid, and the increment functionals at x = L/2
"""

import numpy as np

from fracshe.experiment import Experiment, Parameter, float_list
from fracshe.spectral_kernel import build_basis, g_D, increment_norms


class Kernel(Experiment):
    experiment_type = "kernel"
    parameters = (
        Parameter("t_values", float_list, (1.0,)),
        Parameter("n_points", int, 5),
        Parameter("t_horizon", float, 1.0),
        Parameter("space_shifts", float_list, (0.05, 0.1, 0.2)),
        Parameter("time_shifts", float_list, (0.05, 0.1, 0.2)),
        Parameter("eta", float, 0.4),
    )
    outputs = {
        "kernel.csv": ("beta", "t", "x", "y", "value"),
        "increments.csv": ("beta", "t", "x", "k", "h", "eta", "space_sq", "time_sq"),
    }

    def execute(self, writer):
        basis = build_basis(self.model.domain)
        beta = self.model.beta
        points = np.linspace(0.0, basis.length, self.params["n_points"])

        rows = []
        for t in self.params["t_values"]:
            values = g_D(basis, beta, t, points[:, None], points[None, :], self.policy)
            for i, x in enumerate(points):
                for j, y in enumerate(points):
                    rows.append((beta, t, x, y, values[i, j]))
        writer("kernel.csv", rows)

        t_horizon = self.params["t_horizon"]
        eta = self.params["eta"]
        x = 0.5 * basis.length
        shifts = [(k, 0.0) for k in self.params["space_shifts"]] + [(0.0, h) for h in self.params["time_shifts"]]
        rows = []
        for k, h in shifts:
            norms = increment_norms(basis, beta, t_horizon, x, k, h, eta, self.policy)
            rows.append((beta, t_horizon, x, k, h, eta, norms.space_sq, norms.time_sq))
        writer("increments.csv", rows)

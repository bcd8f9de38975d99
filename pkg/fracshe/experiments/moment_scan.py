"""
moment-scan: second-moment series over the grid times and log-linear growth fits on [fraction * T, T]
"""

import logging
import math

from fracshe.experiment import Experiment, Parameter
from fracshe.moments import deterministic_mode1, fit_log_linear, mc_moments
from fracshe.utils import FitError

logger = logging.getLogger(__name__)


class MomentScan(Experiment):
    experiment_type = "moment-scan"
    parameters = (Parameter("window_fraction", float, 0.5),)
    outputs = {
        "moments.csv": (
            "t",
            "sup_x_second_moment",
            "sup_x_se",
            "mode1_second_moment",
            "mode1_se",
            "deterministic_mode1",
        ),
        "fit.csv": ("which", "slope", "intercept", "ci_halfwidth", "t_lo", "t_hi", "grows"),
    }

    def execute(self, writer):
        series = mc_moments(self.model, self.grid, self.mc.replicas, self.mc.seed, self.policy)
        self.aborted = series.aborted
        baseline = deterministic_mode1(self.model, series.times, self.policy)
        writer(
            "moments.csv",
            zip(
                series.times,
                series.sup_x_second_moment,
                series.sup_x_se,
                series.mode1_second_moment,
                series.mode1_se,
                baseline,
            ),
        )

        t_final = float(series.times[-1])
        window = (self.params["window_fraction"] * t_final, t_final)
        rows = []
        for which in ("sup_x", "mode1"):
            try:
                fit = fit_log_linear(series.times, series.column(which), window, which=which)
                rows.append((which, fit.slope, fit.intercept, fit.ci_halfwidth, fit.t_lo, fit.t_hi, fit.grows))
            except FitError as err:
                logger.warning("no %s growth fit: %s", which, err)
                rows.append((which, math.nan, math.nan, math.nan, window[0], window[1], False))
        writer("fit.csv", rows)

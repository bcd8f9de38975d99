from fracshe.experiments.beta_sweep import BetaSweep
from fracshe.experiments.continuity import Continuity
from fracshe.experiments.kernel import Kernel
from fracshe.experiments.lambda_profile import LambdaProfile
from fracshe.experiments.lambda_scan import LambdaScan
from fracshe.experiments.ml_eval import MlEval
from fracshe.experiments.moment_scan import MomentScan
from fracshe.experiments.simulate import Simulate

EXPERIMENTS = {
    cls.experiment_type: cls
    for cls in (MlEval, Kernel, Simulate, MomentScan, LambdaProfile, BetaSweep, Continuity, LambdaScan)
}

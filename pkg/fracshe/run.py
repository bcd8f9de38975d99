"""
fracshe runner
"""

import logging
import os
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

from fracshe.config import config_digest
from fracshe.csv_writer import write_csv, write_manifest
from fracshe.experiments import EXPERIMENTS
from fracshe.utils import AllAbortedError, ConfigError, FracSheError, QuadratureError
from fracshe.version import VERSION

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


@dataclass
class RunManifest:
    config_digest: str
    seed: int
    experiment: str
    started: str
    finished: str = ""
    version: str = VERSION
    outputs: list = field(default_factory=list)
    aborted: int = 0
    quadrature_failures: int = 0
    status: str = "ok"
    error: str = ""

    @property
    def exit_status(self):
        """Nonzero when a replica aborted, a quadrature failed or the run stopped on an error."""
        failed = self.status != "ok" or self.aborted > 0 or self.quadrature_failures > 0
        return 1 if failed else 0


def _now():
    return datetime.now(timezone.utc).isoformat()


def run(config):
    """
    Execute one experiment

    :param config: validated ExperimentConfig
    :return: RunManifest, also written to <output_dir>/manifest.json
    """
    kind = config.experiment.kind
    if kind not in EXPERIMENTS:
        raise ConfigError([f"experiment.kind must be one of {', '.join(sorted(EXPERIMENTS))}, got {kind!r}"])
    experiment = EXPERIMENTS[kind](config)

    output_dir = config.output_dir
    os.makedirs(output_dir, exist_ok=True)
    manifest = RunManifest(config_digest=config_digest(config), seed=config.mc.seed, experiment=kind, started=_now())
    logger.info("fracshe: running %s (config %s) ...", kind, manifest.config_digest[:12])

    def writer(file_name, rows):
        write_csv(os.path.join(output_dir, file_name), experiment.outputs[file_name], rows)
        manifest.outputs.append(file_name)

    try:
        experiment.execute(writer)
    except QuadratureError as err:
        logger.error("fracshe: %s", err)
        manifest.quadrature_failures += 1
        manifest.status = "failed"
        manifest.error = str(err)
    except AllAbortedError as err:
        logger.error("fracshe: %s", err)
        experiment.aborted = max(experiment.aborted, err.replicas)
        manifest.status = "failed"
        manifest.error = f"{type(err).__name__}: {err}"
    except FracSheError as err:
        logger.error("fracshe: %s", err)
        manifest.status = "failed"
        manifest.error = f"{type(err).__name__}: {err}"

    manifest.aborted = experiment.aborted
    manifest.finished = _now()
    if manifest.aborted:
        logger.warning("fracshe: %d replicas aborted", manifest.aborted)
    write_manifest(os.path.join(output_dir, MANIFEST_NAME), dict(asdict(manifest), exit_status=manifest.exit_status))
    logger.info("fracshe: results written to %s", os.path.abspath(output_dir))
    return manifest

"""Run configuration: option defaults, config-file loading and typed views."""

import json
import logging
import os
from dataclasses import asdict, dataclass
from typing import Optional, Tuple

import yaml

from src.errors import UsageError
from src.regress.bandwidth import (
    DEFAULT_GAMMA,
    DEFAULT_GRID_HIGH,
    DEFAULT_GRID_LOW,
    DEFAULT_GRID_SIZE,
    DEFAULT_VERTEX_SAMPLE,
    BandwidthGrid,
)
from src.sim.synthetic import SimulationConfig
from src.stats.base_test import DEFAULT_ALPHA, DEFAULT_PAIRS, DEFAULT_PERMUTATIONS, TestConfig

logger = logging.getLogger(__name__)

AUTO = "auto"
COMMANDS = ("sync", "pairwise", "kernreg", "bandwidth", "simulate", "bootstrap", "nullcheck", "sizes")
NEEDS_MANIFEST = ("sync", "pairwise", "kernreg", "bandwidth", "bootstrap", "sizes")
AUTO_GAMMA_COMMANDS = ("kernreg", "simulate", "bootstrap")
# output location and worker count do not change any result
UNRECORDED = ("command", "out", "threads")

DEFAULTS = {
    "seed": None,
    "manifest": None,
    "out": "out",
    "gamma": DEFAULT_GAMMA,
    "permutations": DEFAULT_PERMUTATIONS,
    "alpha": DEFAULT_ALPHA,
    "pairs": DEFAULT_PAIRS,
    "pairwise_statistic": "correlation",
    "nboot": 10,
    "method": "kernel",
    "threads": 1,
    "mode": "strict",
    "parametric_f": False,
    "grid_low": DEFAULT_GRID_LOW,
    "grid_high": DEFAULT_GRID_HIGH,
    "grid_size": DEFAULT_GRID_SIZE,
    "vertex_sample": DEFAULT_VERTEX_SAMPLE,
    "source": None,
    "target": None,
    "subjects": 50,
    "timepoints": 100,
    "vertices": 500,
    "roi": None,
    "sigma_max": 0.3,
    "score_low": 20.0,
    "score_high": 60.0,
    "latent_rank": 10,
    "subject_noise": 0.2,
    "background_weight": 0.9,
    "write_cohort": None,
    "repeats": 10,
    "n_small": 20,
}


def _read_file(config_path):
    with open(config_path, "r", encoding="utf-8") as f:
        if config_path.endswith(".json"):
            return json.load(f)
        if config_path.endswith((".yml", ".yaml")):
            return yaml.safe_load(f)
    raise UsageError(f"config file {config_path} must end in .json, .yml or .yaml")


def load_config(config_path, defaults=None):
    """
    Load options from a JSON or YAML file.

    A run manifest is accepted too: its ``parameters`` mapping holds the
    options. Keys missing from the file are filled from ``defaults``.

    Args:
        config_path (str): Path to the configuration file.
        defaults (dict, optional): Fallback values; DEFAULTS when omitted.

    Returns:
        dict: Configuration dictionary.
    """
    try:
        config = _read_file(config_path)
    except OSError as e:
        raise UsageError(f"cannot read config file {config_path}: {e}") from e
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise UsageError(f"config file {config_path} does not parse: {e}") from e

    if config is None:
        config = {}
    if not isinstance(config, dict):
        raise UsageError(f"config file {config_path} must hold a mapping")
    if isinstance(config.get("parameters"), dict):
        config = dict(config["parameters"])
    config.pop("command", None)

    unknown = sorted(set(config) - set(DEFAULTS))
    if unknown:
        raise UsageError(f"config file {config_path} has unknown options {unknown}")
    for key, value in (defaults if defaults is not None else DEFAULTS).items():
        config.setdefault(key, value)
    logger.info(f"Loaded configuration from {config_path}")
    return config


def _parse_gamma(value):
    if isinstance(value, str):
        if value.strip().lower() == AUTO:
            return AUTO
        try:
            return float(value)
        except ValueError as e:
            raise UsageError(f"--gamma must be a positive number or 'auto', got {value!r}") from e
    return float(value)


@dataclass(frozen=True)
class RunConfig:
    """
    Fully resolved options of one CLI run.

    ``to_parameters`` is what the run manifest records; feeding it back via
    ``--config`` reproduces the run.
    """

    command: str
    seed: int
    manifest: Optional[str] = None
    out: str = "out"
    gamma: object = DEFAULT_GAMMA
    permutations: int = DEFAULT_PERMUTATIONS
    alpha: float = DEFAULT_ALPHA
    pairs: int = DEFAULT_PAIRS
    pairwise_statistic: str = "correlation"
    nboot: int = 10
    method: str = "kernel"
    threads: int = 1
    mode: str = "strict"
    parametric_f: bool = False
    grid_low: float = DEFAULT_GRID_LOW
    grid_high: float = DEFAULT_GRID_HIGH
    grid_size: int = DEFAULT_GRID_SIZE
    vertex_sample: int = DEFAULT_VERTEX_SAMPLE
    source: Optional[str] = None
    target: Optional[str] = None
    subjects: int = 50
    timepoints: int = 100
    vertices: int = 500
    roi: Optional[Tuple[int, ...]] = None
    sigma_max: float = 0.3
    score_low: float = 20.0
    score_high: float = 60.0
    latent_rank: int = 10
    subject_noise: float = 0.2
    background_weight: float = 0.9
    write_cohort: Optional[str] = None
    repeats: int = 10
    n_small: int = 20

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.seed is None:
            raise UsageError("--seed is required; runs are never seeded implicitly")
        object.__setattr__(self, "gamma", _parse_gamma(self.gamma))
        if self.command in NEEDS_MANIFEST:
            if not self.manifest:
                raise UsageError(f"{self.command} needs --manifest")
            if not os.path.isfile(self.manifest):
                raise UsageError(f"manifest {self.manifest} does not exist")
        if self.command == "sync" and not (self.source and self.target):
            raise UsageError("sync needs --source and --target subject ids")
        if self.roi is not None:
            object.__setattr__(self, "roi", tuple(int(v) for v in self.roi))
        if self.gamma == AUTO and self.command not in AUTO_GAMMA_COMMANDS:
            raise UsageError(f"--gamma auto is not meaningful for {self.command}")
        # validate numeric ranges eagerly through the typed views
        self.test_config(gamma=DEFAULT_GAMMA if self.gamma == AUTO else self.gamma)
        self.bandwidth_grid()
        if self.command in ("simulate", "nullcheck"):
            self.simulation_config()

    @classmethod
    def from_options(cls, command, options):
        return cls(command=command, **{k: options[k] for k in DEFAULTS if k in options})

    def test_config(self, gamma=None):
        return TestConfig(
            seed=self.seed,
            n_permutations=self.permutations,
            alpha=self.alpha,
            gamma=self.gamma if gamma is None else gamma,
            n_pairs=self.pairs,
            parametric_f=bool(self.parametric_f),
            pairwise_statistic=self.pairwise_statistic,
            n_jobs=self.threads,
        )

    def simulation_config(self):
        return SimulationConfig(
            seed=self.seed,
            n_subjects=self.subjects,
            n_timepoints=self.timepoints,
            n_vertices=self.vertices,
            roi=self.roi,
            sigma_max=self.sigma_max,
            score_range=(self.score_low, self.score_high),
            latent_rank=self.latent_rank,
            subject_noise=self.subject_noise,
            background_weight=self.background_weight,
        )

    def bandwidth_grid(self):
        if int(self.grid_size) < 1:
            raise UsageError(f"grid_size must be >= 1, got {self.grid_size}")
        return BandwidthGrid.log_spaced(self.grid_low, self.grid_high, self.grid_size)

    def to_parameters(self):
        params = asdict(self)
        for key in UNRECORDED:
            params.pop(key)
        if params["roi"] is not None:
            params["roi"] = list(params["roi"])
        return params

"""Stable limit laws for dynamically generated heavy-tailed processes: samplers, path metrics and experiments."""
from ._version import __version__
from .cadlag import CadlagPath, TimeChange, from_partial_sums, j1_distance, modulus
from .gibbs_markov import DyadicRenewalMap, HeavyBernoulliShift, MarkovModulatedShift, Observable, f_alpha
from .intermittent import IntermittentMap, find_Y, make_lsv2
from .limit_lab import ExperimentConfig, ExperimentReport, run_experiment
from .stable_laws import StableParams, TailModel, arcsine_cdf, char_fn, sample_stable

__all__ = [
    "__version__",
    "CadlagPath",
    "TimeChange",
    "from_partial_sums",
    "j1_distance",
    "modulus",
    "DyadicRenewalMap",
    "HeavyBernoulliShift",
    "MarkovModulatedShift",
    "Observable",
    "f_alpha",
    "IntermittentMap",
    "find_Y",
    "make_lsv2",
    "ExperimentConfig",
    "ExperimentReport",
    "run_experiment",
    "StableParams",
    "TailModel",
    "arcsine_cdf",
    "char_fn",
    "sample_stable",
]

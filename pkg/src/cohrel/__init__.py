"""Bayesian reliability of coherent-system components from censored data.

A system unit is observed only at its failure time, so every component
lifetime arrives as an exact, left-, right- or interval-censored record.
Each component is fitted with a three-parameter Weibull model by adaptive
Metropolis sampling and summarised by its posterior-mean reliability curve.
"""

__version__ = "0.1.0"

from .structure import (BUILTIN_STRUCTURES, Component, KofN, Parallel, Series,
                        StructureSyntaxError, evaluate, format_structure, load_structure,
                        parse_structure, system_lifetime, system_lifetimes)
from .generators import (GeneratorParams, GeneratorSpec, NoSolutionError, sample,
                         solve_params, survival)
from .observe import (ComponentDataset, Observation, censoring_table, observe_unit,
                      observe_units, read_observations, write_observations)
from .weibull import (PriorSpec, WeibullParams, log_likelihood, log_posterior_kernel,
                      properness_probe, reliability)
from .sampler import Chain, InitializationError, SamplerConfig, fit
from .summary import ReliabilityCurve, hpd_band, hpd_interval, mean_reliability, parameter_summary
from .bench import SCENARIOS, Scenario, mae, run_benchmark

"""Incentive-compatible clinical trial mechanisms: benchmarks, mechanisms, estimation."""

from .adversaries import (Adversary, LowerBoundPair, lb_adversary_heterogeneous, lb_adversary_homogeneous,
                          pinsker_gap, stochastic_adversary, table_adversary)
from .benchmarks import (BenchmarkResult, bench_homogeneous, bench_typefreq, bench_worst, max_bir_margin,
                         mixture_benchmark_curve, normalization_factor, normalization_pair)
from .estimation import ips_error_bound, ips_estimate, mse, scoring_family
from .incentives import (IncentiveReport, Policy, best_arm_policy, check_bic, check_bir, check_incentives,
                         degeneracy_gap, epsilon_greedy, policy_value, prior_gap, uniform_policy)
from .io import instance_to_dict, load_instance, validate_instance
from .learning import (KlReport, WarmupData, empirical_state, kl_quantities, mle_error_probability, mle_state,
                       warmup_sample_size)
from .mechanisms import (MechanismConfig, TrialHistory, heterogeneous_mechanism, homogeneous_mechanism,
                         run_trial, run_warmup, verify_mechanism_ic)
from .model import (AgentType, Instance, InstanceError, ScoringFunction, TypeDistribution, average_score,
                    expected_utility, outside_option)

__version__ = "0.1.0"

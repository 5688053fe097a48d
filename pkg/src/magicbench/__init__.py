"""Monte Carlo toolkit for benchmarking logical magic states.

Twirling-based Bell-measurement and single-copy fidelity estimation with
O(1/eps) sample complexity, plus the noisy-QEC simulation pipelines
([[7,1,3]] Steane distillation and [[8,3,2]] CCZ preparation) used to
validate them at desk scale.
"""

__version__ = "0.1.0"

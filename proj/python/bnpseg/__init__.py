"""Bayesian nonparametric image segmentation with Potts-coupled partition priors."""

from ._bnpseg import (
    ConfigError,
    ConstantDelta,
    DataDependentDelta,
    DirichletProcess,
    DistanceKind,
    FiniteDirichlet,
    GibbsKernel,
    GswKernel,
    InputError,
    MaxK,
    PoissonDirichlet,
    Problem,
    ScanOrder,
    TruncatedDP,
    crp_expected_clusters,
    crp_simulate,
    describe,
    enumerate_partitions,
    exact_posterior,
    ks_pvalue,
    load_problem,
    log_epf,
    log_posterior,
    make_problem,
    prior_simulate,
    rand_index,
    render_ppm,
    segment,
    synthesize,
)

__version__ = "0.1.0"

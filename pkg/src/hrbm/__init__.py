"""Maximum-likelihood estimation of the Husler-Reiss dependence parameter
under the block maxima method: exact finite-block-size oracles, Fisher
information, the asymptotic bias functional, and a reproducible Monte Carlo
harness.
"""

from .errors import HrbmError, InputError, NumericError, QuadratureError
from .gaussian import (
    NormingConstant,
    bivariate_normal_cdf,
    bivariate_normal_sf,
    bivariate_upper_orthant,
    solve_bm,
    std_normal_cdf,
    std_normal_pdf,
    std_normal_ppf,
    std_normal_sf,
)
from .quadrature import CubatureResult, QuadratureConfig, integrate_2d
from .hr_model import (
    HrDerivBundle,
    HrParam,
    derivatives,
    fisher_information,
    hr_cdf,
    hr_curvature,
    hr_log_density,
    hr_score,
)
from .finite_m import (
    BlockScheme,
    finite_m_expectation,
    finite_m_log_density,
    plan_blocks,
    q_m,
    u_m,
)
from .sampling import MaximaSample, empirical_maxima_cdf_check, sample_block_maxima
from .inference import MleResult, log_likelihood, mle, score_statistic
from .asymptotics import (
    AsymptoticPrediction,
    BiasOracleSequence,
    LimitPair,
    bias_A,
    bias_A_oracle,
    limits_of_scheme,
    predict,
)
from .harness import (
    ExperimentConfig,
    ReplicationReport,
    check_invariants,
    estimate_from_file,
    run_experiment,
)

__version__ = "0.1.0"

"""Random Fourier features, sparse-spectrum GPs, and Stein mixture training."""

from .errors import (
    ConfigurationError,
    DatasetError,
    IllConditionedKernelError,
    NumericalDivergenceError,
    OptimizationFailureError,
    UnsupportedDimensionError,
)
from .exact_gp import (
    DenseGp,
    chol_spd,
    exact_gram,
    gp_nll,
    gp_nll_gram,
    gp_predict,
    gp_predict_gram,
    gram_error,
    nystrom_gram,
)
from .msrfr import (
    MixtureModel,
    MsrfrTrainConfig,
    component_score,
    initial_mixture,
    load_mixture,
    mixture_moments,
    msrfr_predict,
    msrfr_step,
    nlpd,
    rmse,
    save_mixture,
    train_msrfr,
)
from .spectral import (
    GaussianSpectralDensity,
    halton,
    inverse_normal_cdf,
    rff_features,
    rff_gram,
    sample_mc,
    sample_orf,
    sample_qmc,
    sample_svgd,
    spectral_score,
)
from .ssgp import (
    SsgpModel,
    TrainConfig,
    initial_ssgp,
    median_input_lengthscale,
    ssgp_nll,
    ssgp_nll_and_grad,
    ssgp_nll_grad,
    ssgp_predict,
    train_ssgp_mle,
    train_ssgp_svgd,
)
from .svgd import (
    AdaGradScaler,
    SteinKernelConfig,
    matrix_kernel,
    matrix_kernel_grad,
    median_bandwidth,
    resolve_bandwidth,
    svgd_step,
)

__version__ = "0.1.0"

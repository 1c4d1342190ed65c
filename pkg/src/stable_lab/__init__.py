"""Sums of randomly rotated stable matrices: sampling, characteristic functions, convergence checks."""

from .charfn import (
    HaarAverages,
    HaarSample,
    RegimeError,
    cf_infinity,
    cf_m,
    d_term,
    haar_mean_w,
    m_H_estimate,
    orbital_measure,
    variance_v,
    w_alpha,
    w_alpha_abs_bound,
)
from .matrix_core import (
    EnsembleSpec,
    SupportCase,
    SupportTag,
    classify_support,
    sample_haar_unitary,
    sample_Y_m,
    sample_Y_m_batch,
    t_zero,
)
from .stable_core import (
    CfEstimate,
    InvariantError,
    SpectralMeasureEig,
    StableVectorSpec,
    empirical_cf_vector,
    nu_alpha,
    sample_skewed_stable,
    sample_stable_vector,
    symmetrize_measure,
    target_cf_vector,
)

__version__ = "0.1.0"

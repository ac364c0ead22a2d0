"""zetalab: seeded simulation lab for random prime models and zeta functions."""

from .additive import (
    CoverageReport,
    FailureBound,
    InfinitudeResult,
    ThinSequence,
    failure_bound,
    infinitude_experiment,
    representation_scan,
    thin_sequence,
)
from .cramer import (
    IndicatorStream,
    CountingPath,
    QuasiPrimeSequence,
    counting_moments,
    counting_path,
    li,
    sample_indicators,
    sequence_log_probability,
    sparse_membership_sample,
)
from .errors import (
    DomainError,
    ModelIntegrityError,
    ParameterError,
    SingularFactorError,
    ValidationError,
    ZetalabError,
)
from .rng import RandomStream, StreamKey, bernoulli, derive_substream, parse_seed, uniform01
from .symmetry import (
    BlockParams,
    SymmetricBlock,
    block_first_sum,
    build_blocks,
    clt_fluctuation_check,
    convergence_region_scan,
    iter_blocks,
    tilde_product_partial,
    tilde_zeta_partial,
)
from .zeta_random import (
    ComplexEvaluation,
    SeriesMoments,
    centered_s1_values,
    concentration_decay,
    critical_line_scan,
    euler_product_partial,
    log_zeta_partial,
    s1_moments,
    s1_partial,
    s1_realization_mean,
    zeta_grid,
)
from .zeta_reference import (
    EtaValue,
    StieltjesTable,
    build_stieltjes_table,
    dirichlet_partial,
    eta,
    phi_partial,
    stieltjes_gamma,
    zeta_laurent,
    zeta_via_eta,
)

__version__ = "0.1.0"

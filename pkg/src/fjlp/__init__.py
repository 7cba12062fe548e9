"""Fast linear embeddings of Euclidean space into lp, p in [1, 2].

The transform is scale * A D1 H D2 H D3: three random sign diagonals, two
Walsh-Hadamard stages that flatten the input, a structured 4-wise independent
sign matrix applied in O(d log k) arithmetic, and the Gaussian-moment
normalization k**(-1/p) / beta_p. Alongside the transform the package ships a
statistical verification harness for its concentration behavior and a
desk-scale demonstrator of the dimension lower bound for arbitrary target
norms.
"""

from .embed import (
    DEFAULT_C0,
    GaussianBaseline,
    MomentConstants,
    Transform,
    apply,
    apply_set,
    beta_p,
    gaussian_baseline,
    gaussian_norm_samples,
    moment_constants,
    plan,
    required_k,
)
from .formats import (
    FormatError,
    load_transform_spec,
    load_vectors,
    save_transform_spec,
    save_vectors,
    transform_spec,
)
from .fourwise import (
    FourWiseMatrix,
    fourwise_build,
    fourwise_entry,
    fourwise_multiply_explicit,
    fourwise_multiply_fast,
    fourwise_verify_strength4,
)
from .gf2m import FieldSpec, field_new, form_index, gf_cube, gf_mul, trace
from .lowerbound import (
    CoverCode,
    DecodingAmbiguityError,
    HardFamily,
    cover_round,
    decode_subsets,
    encode,
    hard_family_build,
    lower_bound_scale,
    separation_intervals,
)
from .report import VerificationReport, wilson_interval
from .verify import (
    ColumnScaledMatrix,
    column_scaled,
    compare_gaussian,
    distortion_suite,
    embedding_norm_samples,
    l4_flatness_check,
    max_pairwise_distortion,
    moment_check,
    opnorm_2to2,
    opnorm_2to4_lower,
    tail_estimate,
)
from .wht import wht_full, wht_partial, wht_unnormalized

__version__ = "0.1.0"

"""Training-free low-light image enhancement by evolutionary search.

Each image gets its own brightness/contrast/gamma setting, found by a
small NSGA-II run that trades histogram entropy against drift in deep
feature space plus a mean-brightness penalty.
"""

from evolight.image import (
    load_image,
    save_image,
    to_grayscale,
    histogram256,
    shannon_entropy,
    image_entropy,
    mean_brightness,
    resize_bilinear,
)
from evolight.enhance import (
    EnhanceParams,
    ParamBounds,
    IDENTITY_PARAMS,
    apply_brightness,
    apply_contrast,
    apply_gamma,
    enhance,
    clip_params,
)
from evolight.features import (
    FeatureVector,
    ExtractorSpec,
    FallbackFeatureExtractor,
    OnnxFeatureExtractor,
    create_extractor,
    feature_distance,
)
from evolight.fitness import (
    FitnessPair,
    PenaltyConfig,
    Evaluation,
    FitnessEvaluator,
    brightness_penalty,
    evaluate,
    dominates,
)
from evolight.moea import (
    Individual,
    EvolutionConfig,
    GenerationStats,
    init_population,
    nondominated_sort,
    crowding_distance,
    tournament_select,
    blend_crossover,
    gaussian_mutate,
    adaptive_mutation_rate,
    local_search,
    evolve,
    select_representative,
)
from evolight.metrics import (
    psnr,
    ssim,
    MetricsReport,
    write_report_csv,
    write_report_json,
)
from evolight.batch import (
    RunConfig,
    RunSummary,
    discover_inputs,
    run_batch,
)

__version__ = "0.1.0"

__all__ = [
    "load_image",
    "save_image",
    "to_grayscale",
    "histogram256",
    "shannon_entropy",
    "image_entropy",
    "mean_brightness",
    "resize_bilinear",
    "EnhanceParams",
    "ParamBounds",
    "IDENTITY_PARAMS",
    "apply_brightness",
    "apply_contrast",
    "apply_gamma",
    "enhance",
    "clip_params",
    "FeatureVector",
    "ExtractorSpec",
    "FallbackFeatureExtractor",
    "OnnxFeatureExtractor",
    "create_extractor",
    "feature_distance",
    "FitnessPair",
    "PenaltyConfig",
    "Evaluation",
    "FitnessEvaluator",
    "brightness_penalty",
    "evaluate",
    "dominates",
    "Individual",
    "EvolutionConfig",
    "GenerationStats",
    "init_population",
    "nondominated_sort",
    "crowding_distance",
    "tournament_select",
    "blend_crossover",
    "gaussian_mutate",
    "adaptive_mutation_rate",
    "local_search",
    "evolve",
    "select_representative",
    "psnr",
    "ssim",
    "MetricsReport",
    "write_report_csv",
    "write_report_json",
    "RunConfig",
    "RunSummary",
    "discover_inputs",
    "run_batch",
]

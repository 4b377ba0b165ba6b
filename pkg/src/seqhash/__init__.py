"""Coarse scalar-quantization hashing with sequence-resolved lookup.

Place descriptors are projected with PCA, quantized independently per
dimension into K bins, and packed into base-K integer addresses. The
deliberately coarse settings overload the inverted index with long candidate
lists; a constant-velocity sequence match over a window of quantized query
frames picks the right candidate back out.
"""

from .dataset import (
    DatasetRecipe,
    DescriptorMatrix,
    NoiseModel,
    apply_noise,
    build_recipe,
    concat,
    fit_noise_model,
    generate_traverse,
    homogenize,
    load_descriptors,
    rescale_variance,
    save_descriptors,
)
from .errors import DegenerateInputError, FormatError, InvalidArgumentError
from .hashindex import (
    InvertedIndex,
    build,
    load_index,
    lookup,
    nearest_occupied,
    query_single,
    save_index,
)
from .quantizer import (
    Quantizer,
    fit,
    hash_address,
    load_quantizer,
    quantization_error,
    quantize,
    save_quantizer,
    unhash,
)
from .seqmatch import MatchResult, SdcTable, SequenceMatcher, match_sequence, sdc_distance
from .transform import PcaModel, fit_incremental, load_pca, project, save_pca

__all__ = [
    "DatasetRecipe",
    "DescriptorMatrix",
    "NoiseModel",
    "apply_noise",
    "build_recipe",
    "concat",
    "fit_noise_model",
    "generate_traverse",
    "homogenize",
    "load_descriptors",
    "rescale_variance",
    "save_descriptors",
    "DegenerateInputError",
    "FormatError",
    "InvalidArgumentError",
    "InvertedIndex",
    "build",
    "load_index",
    "lookup",
    "nearest_occupied",
    "query_single",
    "save_index",
    "Quantizer",
    "fit",
    "hash_address",
    "load_quantizer",
    "quantization_error",
    "quantize",
    "save_quantizer",
    "unhash",
    "MatchResult",
    "SdcTable",
    "SequenceMatcher",
    "match_sequence",
    "sdc_distance",
    "PcaModel",
    "fit_incremental",
    "load_pca",
    "project",
    "save_pca",
]

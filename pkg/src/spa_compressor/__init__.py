"""Hierarchical scene/event multimodal token compressor."""

from .analytics import CompressionReport, RatioInput, compression_ratio, sweep
from .compressor import CompressorConfig, ForwardResult, SpaCompressor
from .fitting import FitConfig, fit
from .gradcheck import finite_difference_check
from .sequence import AsrSentence, Frame, InterleavedSequence, align_sentences, build_sequence
from .synthetic import SyntheticVideoSpec, generate
from .time_encoder import TimeEncoderParams, encode_timestamp, time_encoder_params

__all__ = [
    "AsrSentence",
    "CompressionReport",
    "CompressorConfig",
    "FitConfig",
    "ForwardResult",
    "Frame",
    "InterleavedSequence",
    "RatioInput",
    "SpaCompressor",
    "SyntheticVideoSpec",
    "TimeEncoderParams",
    "align_sentences",
    "build_sequence",
    "compression_ratio",
    "encode_timestamp",
    "finite_difference_check",
    "fit",
    "generate",
    "sweep",
    "time_encoder_params",
]

__version__ = "0.1.0"

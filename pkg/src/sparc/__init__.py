"""Sparse regression codes: encoding, AMP decoding, state evolution, spatial
coupling, lossy compression and multi-user constructions."""
from .core import (DecodeMetrics, MessageVector, SparcParams, bits_to_nats, compute_metrics, decode_message,
                   encode_message, nats_to_bits)
from .errors import (ConfigError, DivergenceError, InfeasibleError, InputSizeError, InterfaceError,
                     NotDecodableError, ScaleError, SparcError, UndefinedPosteriorError)

__version__ = "0.1.0"

__all__ = ["SparcParams", "MessageVector", "DecodeMetrics", "encode_message", "decode_message",
           "compute_metrics", "bits_to_nats", "nats_to_bits", "SparcError", "ConfigError", "InputSizeError",
           "ScaleError", "DivergenceError", "NotDecodableError", "InfeasibleError", "UndefinedPosteriorError",
           "InterfaceError"]

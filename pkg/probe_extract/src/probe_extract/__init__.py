"""Image-folder embedding extraction emitting the zoomatch stats container."""

from .errors import ConfigError, DataError, ProbeExtractError
from .extract import ExtractionJob, ExtractionResult, extract
from .probes import available_probes, embed_captions, get_probe

__all__ = [
    "ConfigError",
    "DataError",
    "ExtractionJob",
    "ExtractionResult",
    "ProbeExtractError",
    "available_probes",
    "embed_captions",
    "extract",
    "get_probe",
]

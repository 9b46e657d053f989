"""Image-folder to oodbench embedding file extraction."""

__version__ = "0.1.0"

from .extractor import ExtractionError, ExtractorConfig, extract
from .fileformat import write_embedding_files

"""Image-folder extractor emitting faceaudit attribute-record JSONL.

This package is upstream of the audit engine and communicates with it only
through its external interfaces: the JSONL record schema and the ``faceaudit
ingest`` validator. It classifies face images, maps the classifier's native
buckets onto the record taxonomy via manifest-supplied maps, and never
computes audit metrics itself.
"""

from .classifiers import ClassifierUnavailableError, StubClassifier, get_classifier
from .extract import ExtractionResult, SkipEntry, extract, write_outputs
from .manifest import ExtractionManifest, ManifestError, load_manifest

__all__ = [
    "ClassifierUnavailableError",
    "ExtractionManifest",
    "ExtractionResult",
    "ManifestError",
    "SkipEntry",
    "StubClassifier",
    "extract",
    "get_classifier",
    "load_manifest",
    "write_outputs",
]

__version__ = "0.1.0"

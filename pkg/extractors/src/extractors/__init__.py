"""CNN inference sidecar: image embeddings and semantic-segmentation maps.

Outputs use the main pipeline's file formats (feature CSVs, single-channel
class-index PNGs), so they can be dropped straight into its feature directory.
"""

__version__ = "0.1.0"

from .embeddings import EmbeddingSpec, extract_embeddings  # noqa: F401
from .segmentation import segment_streetview  # noqa: F401

"""Answer-sentence reranking with convolutional encoders and overlap-aware embeddings."""
from relqa.numeric import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]

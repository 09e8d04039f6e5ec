"""Color, segmentation and review analytics for photo collections of urban quarters."""

__version__ = "0.1.0"

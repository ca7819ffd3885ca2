"""Point Proposal Network: CNN point-source detection for survey images."""
from .core import Catalog, GridSpec, Image, PointRecord, grid_to_pixel, origin_position
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Catalog",
    "GridSpec",
    "Image",
    "PointRecord",
    "grid_to_pixel",
    "origin_position",
]

"""Read-only episode and frame iteration over robolight dataset trees."""

from .loader import LoaderFilters, LoaderHandle, frames, open

__all__ = ["LoaderFilters", "LoaderHandle", "frames", "open"]
__version__ = "0.1.0"

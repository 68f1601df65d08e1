"""Planar geometry engine: region overlay, buffering, measures."""

from .union import (  # noqa: F401
    Region,
    polygon_union,
    region_from_geometry,
    region_to_geometry,
    union,
)
from .buffer import buffer  # noqa: F401
from .measures import area, centroid, envelope, length  # noqa: F401

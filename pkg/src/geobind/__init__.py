"""Client toolkit for discovering, describing and invoking published
geospatial processes, with a WFS feature source, a planar geometry engine,
an offline mock service stack, a command line and a JSON bridge."""

__version__ = "0.1.0"

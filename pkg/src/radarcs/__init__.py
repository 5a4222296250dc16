"""radarcs — Camera- and CFAR-guided compressed sensing of scanning radar frames."""

__version__ = "0.1.0"

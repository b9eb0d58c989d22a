"""2D high-order DG solver with mortar and point-to-point interface handling."""

__version__ = "0.1.0"

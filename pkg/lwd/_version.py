# LwD -- package version
"""Version of the :mod:`lwd` package (single source for setup.py)."""

__version__ = "0.3.0"

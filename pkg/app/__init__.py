"""qmarginal - quantum marginal problems and channel compatibility."""

__version__ = "0.1.0"

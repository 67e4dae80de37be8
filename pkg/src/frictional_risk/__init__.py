"""Capital requirements with frictions and portfolio constraints on finite scenario spaces."""

__version__ = "0.1.0"

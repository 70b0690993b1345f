"""Random-partition models of 4D and 5D U(1) gauge theories and their limit shapes."""

__version__ = "0.1.0"

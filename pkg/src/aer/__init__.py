"""Asymptotic expansion regularisation for a Burgers-type source problem."""

__version__ = "0.1.0"

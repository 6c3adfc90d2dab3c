"""Tamed stochastic gradient descent: optimizers, test problems, convergence bounds and experiments."""

__version__ = "1.0.0"

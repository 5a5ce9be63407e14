"""Community-level fairness auditing and debiasing for graph neural networks."""

__version__ = "0.1.0"

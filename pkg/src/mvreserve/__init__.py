"""Multivariate loss reserving engine.

Jointly models two lines of business from paired run-off triangles:
a GRU sequence-to-sequence reserve predictor with a multi-task loss,
copula regression baselines, predictive reserve distributions
(Monte-Carlo, parametric bootstrap, block bootstrap, Gaussian-copula
tabular synthesis), and TVaR-based risk-capital analytics, plus a
simulation-study harness and a batch CLI.
"""

__version__ = "0.1.0"

"""Cone programs for marginal, extension and robustness problems."""

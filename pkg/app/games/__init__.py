"""Correlation games derived from robustness witnesses."""

"""Reproducibility records and method cross-checks."""

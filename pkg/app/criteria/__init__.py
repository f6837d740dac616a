"""Closed-form and entropic compatibility criteria."""

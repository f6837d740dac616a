"""Tests for qmarginal."""

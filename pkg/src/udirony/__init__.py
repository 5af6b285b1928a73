"""Dependency-syntax features and classical classifiers for irony detection on UD-parsed tweets."""

__version__ = "0.1.0"

"""Weak-value based quantifiers of nonclassical correlations."""
__version__ = "0.1.0"

"""Explainable sentiment analysis of social-media comments."""

__version__ = "0.1.0"

"""Discourse-aware dialogue response ranking via multiview CCA."""

__version__ = "0.1.0"

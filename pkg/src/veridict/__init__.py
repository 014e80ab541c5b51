"""Multimodal deception-detection analytics downstream of per-frame feature extractors."""

__version__ = "0.1.0"

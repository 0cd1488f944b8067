"""Self-training for data-to-text generation with noise-injection sampling."""

__version__ = "0.1.0"

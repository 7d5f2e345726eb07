"""armpoint: analyze, synthesize, and learn desk-scale pointing gestures."""

__version__ = "0.1.0"

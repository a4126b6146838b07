"""Building footprints from very large satellite scenes and few local labels."""

__version__ = "0.1.0"

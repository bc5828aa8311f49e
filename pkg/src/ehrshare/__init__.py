"""Patient-controlled EHR sharing platform."""

__version__ = "0.1.0"

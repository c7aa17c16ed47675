"""Community detection on connected time-dependent hashtag networks."""

__version__ = "0.1.0"

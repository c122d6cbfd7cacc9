"""SyncKern - synchronized time-series group statistics."""

__version__ = "0.1.0"

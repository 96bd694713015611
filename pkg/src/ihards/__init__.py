"""Integrated human-activity-recognition dataset tools and a numpy 1D-CNN."""

__version__ = "0.1.0"

"""Pick-and-place regrasp planning with a vertical support pin."""

__version__ = "0.1.0"

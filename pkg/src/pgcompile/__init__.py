"""Policy-gradient compilation of shallow variational quantum circuits."""

__version__ = "0.1.0"

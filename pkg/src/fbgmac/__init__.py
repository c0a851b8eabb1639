"""Feedback coding schemes for Gaussian multiple-access wiretap channels."""

__version__ = "0.1.0"

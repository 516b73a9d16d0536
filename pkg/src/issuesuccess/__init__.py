"""Predict whether a Jira issue will be resolved successfully from its text."""
__version__ = "0.1.0"

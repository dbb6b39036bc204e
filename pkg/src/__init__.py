"""Elastic-Net C-RAN provisioning simulator package."""

__version__ = "0.1.0"

"""Configuration module for the Elastic-Net provisioning simulator."""

from .configuration import ConfigManager, RunOptions, Scenario, ValidationOptions

__all__ = [
    "ConfigManager",
    "RunOptions",
    "Scenario",
    "ValidationOptions",
]

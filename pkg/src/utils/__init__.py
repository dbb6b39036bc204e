"""Utility modules for the Elastic-Net provisioning simulator."""

from .exceptions import (
    ElasticNetConfigError,
    ElasticNetDomainError,
    ElasticNetError,
    ElasticNetEstimationError,
    ElasticNetOutputError,
)
from .logging import JSONFormatter, LoggerAdapter, get_logger, setup_logging

__all__ = [
    "ElasticNetError",
    "ElasticNetConfigError",
    "ElasticNetDomainError",
    "ElasticNetEstimationError",
    "ElasticNetOutputError",
    "setup_logging",
    "get_logger",
    "JSONFormatter",
    "LoggerAdapter",
]

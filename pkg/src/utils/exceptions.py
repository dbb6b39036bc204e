"""Custom exceptions for the Elastic-Net provisioning simulator."""


class ElasticNetError(Exception):
    """Base exception for Elastic-Net errors."""

    pass


class ElasticNetConfigError(ElasticNetError):
    """Exception raised for scenario configuration errors."""

    pass


class ElasticNetDomainError(ElasticNetError, ValueError):
    """Exception raised when an operation is called outside its valid domain."""

    pass


class ElasticNetEstimationError(ElasticNetError):
    """Exception raised when a Monte Carlo estimate is undefined."""

    def __init__(self, message, samples=0):
        self.message = message
        self.samples = samples
        super().__init__(self.message)


class ElasticNetOutputError(ElasticNetError):
    """Exception raised when a report cannot be written."""

    def __init__(self, message, path=None):
        self.message = message
        self.path = path
        super().__init__(f"{message} ({path})" if path else message)

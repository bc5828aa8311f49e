from .proxyclient import HttpProxyClient, LocalProxyClient, ProxyTransport
from .service import (
    MEDIA_CONTENT_TYPES,
    RECORDS_COLLECTION,
    SHARES_COLLECTION,
    ResourceConfig,
    ResourceService,
    ThresholdNotMet,
)

__all__ = [
    "HttpProxyClient",
    "LocalProxyClient",
    "MEDIA_CONTENT_TYPES",
    "ProxyTransport",
    "RECORDS_COLLECTION",
    "ResourceConfig",
    "ResourceService",
    "SHARES_COLLECTION",
    "ThresholdNotMet",
]

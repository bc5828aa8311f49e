from .service import (
    AuthConfig,
    AuthService,
    TokenAuthority,
    TokenPair,
    UserDirectory,
    UserView,
)

__all__ = [
    "AuthConfig",
    "AuthService",
    "TokenAuthority",
    "TokenPair",
    "UserDirectory",
    "UserView",
]

from .service import VAULT_COLLECTION, KfragVault

__all__ = ["KfragVault", "VAULT_COLLECTION"]

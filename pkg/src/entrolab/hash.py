import hashlib
from typing import Any

from .utils import canonical_json


def config_digest(data: Any) -> str:
    """SHA-256 of the canonical JSON form, so key order does not matter."""
    return hashlib.sha256(canonical_json(data).encode("utf-8")).hexdigest()

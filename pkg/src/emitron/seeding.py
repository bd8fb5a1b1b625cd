"""Stable, order-independent seeding helpers.

Every stochastic step in the toolkit draws from a stream keyed by
``stable_seed(master, entity_id, ...)`` so results do not depend on the
order in which entities are processed or on thread scheduling.
"""
import hashlib


def stable_seed(*parts) -> int:
    """Derive a 64-bit seed from an arbitrary tuple of hashable parts."""
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(str(part).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "big")

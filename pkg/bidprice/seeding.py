"""
Derivation of reproducible random streams from one master seed.
"""
import hashlib

import numpy as np


def derive_seed(master: int, *labels: object) -> int:
    """Derive a 64-bit sub-seed from a master seed and a label path."""
    text = "/".join([str(master)] + [str(label) for label in labels])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def make_rng(master: int, *labels: object) -> np.random.Generator:
    """Create a numpy generator seeded by a labelled sub-seed."""
    return np.random.default_rng(derive_seed(master, *labels))

"""
Toolkit-wide constants: markers, constraint group labels and wire schema.
"""
from typing import Optional, Tuple

# Owner marker for legs used by at least two parties
SHARED = "SHARED"

# Constraint group kinds
SHARED_CAP = "SHARED_CAP"
PARTY_CAP = "PARTY_CAP"
UPPER_BOUND = "UPPER_BOUND"
LOWER_BOUND = "LOWER_BOUND"
NONNEG = "NONNEG"
SPARSITY_ROW = "SPARSITY_ROW"
SPARSITY_COL = "SPARSITY_COL"

PARTY_GROUPS = (PARTY_CAP, UPPER_BOUND, LOWER_BOUND, NONNEG)


def group_label(kind: str, party: Optional[str] = None) -> str:
    """Build a row group label such as ``PARTY_CAP(1)``."""
    if party is None:
        return kind
    return f"{kind}({party})"


def var_label(name: str, party: str) -> str:
    """Build a variable block label such as ``u(1)``."""
    return f"{name}({party})"


# Masked payload wire schema
WIRE_MAGIC = b"BPMASK"
WIRE_SCHEMA_VERSION = 1
DIGEST_SIZE = 32

PAYLOAD_BLOCKS: Tuple[str, ...] = (
    "r_bar",
    "xi_bar",
    "A_bar",
    "B_bar",
    "F_bar",
    "c_bar",
    "G_bar",
    "one_bar",
    "H_bar",
    "eta_bar",
    "L_bar",
    "A_eta",
    "offset",
)

# Protocol message types
MSG_PAYLOAD = "masked-payload"
MSG_VERDICT = "certificate-verdict"

# Advisories a party may attach to its payload header
ADVISORY_SMALL_PARTY = "party size below privacy threshold"
ADVISORY_IDENTITY_INCIDENCE = "identity incidence exposes D"
ADVISORY_SPARSE_KEYS = "structured sparse keys may weaken privacy"

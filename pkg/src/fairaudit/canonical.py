"""Canonical value formatting shared by records, reports, and the server.

Floats are fixed at 6 significant digits everywhere they are stored or
serialized, so doctrine evaluation on a parsed report reproduces the original
verdicts bit for bit.
"""

from __future__ import annotations

import json


def round_sig(x: float, digits: int = 6) -> float:
    if x == 0.0:
        return 0.0
    return float(f"{x:.{digits}g}")


def canon(obj):
    """Recursively canonicalize: floats to 6 significant digits, tuples to
    lists, dict insertion order ignored (serialization sorts keys)."""
    if isinstance(obj, float):
        return round_sig(obj)
    if isinstance(obj, dict):
        return {k: canon(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canon(v) for v in obj]
    return obj


def dumps_canonical(obj) -> str:
    return json.dumps(canon(obj), sort_keys=True, indent=2) + "\n"

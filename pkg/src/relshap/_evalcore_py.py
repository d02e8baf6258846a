"""Pure-Python witness-scan kernel, semantics-identical to the extension.

Works on Python int bit masks instead of word arrays; addition order matches
the compiled kernel (sequential in row order), so both backends produce
bit-identical values.
"""

from __future__ import annotations

__all__ = ["eval_players"]


def eval_players(witness_rows, terms, mask: int, kind: int) -> float:
    """Aggregate over rows whose witness player bits are all set in mask.

    witness_rows: per row, a tuple of player indices (no padding).
    kind: 0 = SUM of terms, 1 = COUNT, 2 = EXISTS (0/1, early exit).
    """
    if kind == 2:
        for ws in witness_rows:
            for p in ws:
                if not (mask >> p) & 1:
                    break
            else:
                return 1.0
        return 0.0
    acc = 0.0
    if kind == 1:
        for ws in witness_rows:
            for p in ws:
                if not (mask >> p) & 1:
                    break
            else:
                acc += 1.0
        return acc
    for i, ws in enumerate(witness_rows):
        for p in ws:
            if not (mask >> p) & 1:
                break
        else:
            acc += terms[i]
    return acc

"""CSV emission helpers: 17-significant-digit rendering so every emitted
number re-parses to the identical float."""

from __future__ import annotations

import math


def fmt17(x) -> str:
    """Render a float at 17 significant digits; infinities as inf/-inf."""
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def csv_text(header, rows) -> str:
    """Join a header tuple and row tuples of already-rendered strings."""
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    return "\n".join(lines) + "\n"

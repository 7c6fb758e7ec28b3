"""Shared test utilities."""

import numpy as np


def crandn(rng, *shape):
    """Circular complex normal samples with unit variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = {}


def report(number, title, ok, detail, elapsed, limit=None):
    timing = f"{elapsed:.2f}s" + (f" (limit {limit:g}s)" if limit is not None else "")
    status = "PASS" if ok else "FAIL"
    line = f"criterion {number:2d} {status}: {title} | {detail} | {timing}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return line

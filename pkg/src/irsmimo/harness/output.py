"""Experiment results and their CSV / JSON serialisation."""

from dataclasses import dataclass, field
import datetime
import json
import math
import os

import numpy as np

__all__ = ["Row", "ExperimentResult", "summarize", "format_number", "to_csv",
           "write_result", "CSV_HEADER"]

CSV_HEADER = ("sweep_var", "value", "scheme", "mean", "stderr", "trials")


@dataclass(frozen=True)
class Row:
    value: float
    scheme: str
    mean: float
    stderr: float
    trials: int


@dataclass
class ExperimentResult:
    """Aggregated sweep output plus metadata for the JSON sidecar."""

    experiment: str
    sweep_var: str
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def add(self, value, scheme, samples):
        mean, se, n = summarize(samples)
        self.rows.append(Row(value, scheme, mean, se, n))

    def series(self, scheme):
        """``(values, means, stderrs)`` of one scheme in sweep order."""
        rows = [r for r in self.rows if r.scheme == scheme]
        return (np.array([r.value for r in rows]), np.array([r.mean for r in rows]),
                np.array([r.stderr for r in rows]))


def summarize(samples):
    """Mean, standard error (sample std / sqrt(n)) and count.

    A single sample has no defined spread; its standard error is NaN.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("no samples to summarise")
    mean = float(np.mean(x))
    se = float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else math.nan
    return mean, se, int(x.size)


def format_number(x):
    """12 significant digits, '.' decimal separator, no locale."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    out = f"{x:.12g}"
    return "0" if out == "-0" else out


def to_csv(result):
    lines = [",".join(CSV_HEADER)]
    for r in result.rows:
        lines.append(",".join([result.sweep_var, format_number(r.value), r.scheme,
                               format_number(r.mean), format_number(r.stderr),
                               str(int(r.trials))]))
    return "\n".join(lines) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def write_result(result, out_dir, config=None):
    """Write ``<experiment>.csv`` and ``<experiment>.json`` into ``out_dir``.

    The CSV depends only on the numbers; the timestamp lives in the
    sidecar so repeated runs give byte-identical CSVs.
    """
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{result.experiment}.csv")
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(to_csv(result))
    meta = dict(result.metadata)
    meta["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    sidecar = {"experiment": result.experiment, "sweep_var": result.sweep_var,
               "metadata": meta, "config": config, "extras": result.extras}
    json_path = os.path.join(out_dir, f"{result.experiment}.json")
    with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(sidecar), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, json_path

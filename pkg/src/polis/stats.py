"""Summary statistics, normal-approximation intervals and a one-sided z-test.

The intervals and the test use normal quantiles rather than Student's t,
which is what the reference tables were built with for samples of 30.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path
from statistics import NormalDist
from typing import Iterable, Sequence

import numpy as np

from polis.errors import SmallSampleWarning

__all__ = [
    "SampleSummary",
    "normal_quantile",
    "normal_cdf",
    "z_for_confidence",
    "summarize",
    "confidence_interval",
    "one_sided_test",
    "read_values",
    "summary_block",
    "format_summary_table",
]

_STD_NORMAL = NormalDist()
LARGE_SAMPLE = 30


@dataclass(frozen=True)
class SampleSummary:
    n: int
    mean: float
    std: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("a sample summary needs n >= 1")
        if self.std < 0 or math.isnan(self.std):
            raise ValueError(f"std must be non-negative, got {self.std}")


def normal_quantile(p: float) -> float:
    return _STD_NORMAL.inv_cdf(p)


def normal_cdf(x: float) -> float:
    return _STD_NORMAL.cdf(x)


def z_for_confidence(confidence: float) -> float:
    """Two-sided critical value, e.g. 1.959964 for 0.95."""
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must be in (0, 1), got {confidence}")
    return normal_quantile(0.5 + confidence / 2.0)


def summarize(values: Iterable[float]) -> SampleSummary:
    """Mean and unbiased (n - 1) standard deviation; std is 0 when n = 1."""
    x = np.asarray(list(values), dtype=float)
    if x.size == 0:
        raise ValueError("cannot summarize an empty sample")
    std = float(x.std(ddof=1)) if x.size > 1 else 0.0
    return SampleSummary(int(x.size), float(x.mean()), std)


def confidence_interval(summary: SampleSummary, confidence: float = 0.95) -> tuple[float, float]:
    """``mean -/+ z * std / sqrt(n)``.

    Warns with :class:`SmallSampleWarning` when ``n <= 30``, where the normal
    approximation is not guaranteed.
    """
    if summary.n < 2:
        raise ValueError("a confidence interval needs n >= 2")
    if summary.n <= LARGE_SAMPLE:
        warnings.warn(
            f"normal-approximation interval from n={summary.n} <= {LARGE_SAMPLE} samples",
            SmallSampleWarning,
            stacklevel=2,
        )
    half = z_for_confidence(confidence) * summary.std / math.sqrt(summary.n)
    return summary.mean - half, summary.mean + half


def one_sided_test(sample_a: SampleSummary, sample_b: SampleSummary) -> tuple[float, float]:
    """Unequal-variance two-sample z-test of ``mu_a <= mu_b`` against ``mu_a > mu_b``.

    Returns ``(z, p)`` with ``z = (mean_a - mean_b) / sqrt(s_a^2/n_a + s_b^2/n_b)``
    and ``p`` the upper-tail probability of ``z``. A small ``p`` is evidence
    that sample A has the larger mean.

    When both standard deviations are zero, ``z`` is +/-inf for different
    means and 0 for equal means.
    """
    for s in (sample_a, sample_b):
        if s.n < 2:
            raise ValueError("each sample needs n >= 2")
    diff = sample_a.mean - sample_b.mean
    se = math.sqrt(sample_a.std**2 / sample_a.n + sample_b.std**2 / sample_b.n)
    if se == 0.0:
        z = 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
    else:
        z = diff / se
    # upper tail computed as the lower tail of -z to keep precision for large z
    p = _STD_NORMAL.cdf(-z) if math.isfinite(z) else (0.0 if z > 0 else 1.0)
    return z, p


def read_values(path: str | Path, column: str | int | None = None) -> list[float]:
    """Read a sample from a text file.

    Without ``column`` the file holds one number per line; blank lines and
    ``#`` comments are skipped. With ``column`` the file is CSV and the named
    (header) or 0-based indexed column is read.
    """
    path = Path(path)
    values = []
    if column is None:
        for line_no, line in enumerate(path.read_text().splitlines(), start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError:
                raise ValueError(f"{path}:{line_no}: not a number: {line.strip()!r}") from None
        return values

    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    start = 0
    if isinstance(column, str) and not column.isdigit():
        header = [h.strip() for h in rows[0]]
        if column not in header:
            raise ValueError(f"{path}: no column named {column!r}")
        idx, start = header.index(column), 1
    else:
        idx = int(column)
        if rows and not _is_number(rows[0][idx] if idx < len(rows[0]) else ""):
            start = 1  # header row
    for line_no, row in enumerate(rows[start:], start=start + 1):
        if not row or not "".join(row).strip():
            continue
        try:
            values.append(float(row[idx]))
        except (ValueError, IndexError):
            raise ValueError(f"{path}:{line_no}: no number in column {column!r}") from None
    return values


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


_ROWS = (
    ("Sample mean", "mean"),
    ("Sample deviation", "std"),
    ("max p.i. 95%", "hi_95"),
    ("min p.i. 95%", "lo_95"),
    ("max p.i. 98%", "hi_98"),
    ("min p.i. 98%", "lo_98"),
)


def summary_block(values: Sequence[float]) -> dict:
    """Mean, std and the 95% / 98% interval bounds of one sample."""
    s = summarize(values)
    block = asdict(s)
    if s.n >= 2:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SmallSampleWarning)
            for conf in (95, 98):
                lo, hi = confidence_interval(s, conf / 100)
                block[f"lo_{conf}"], block[f"hi_{conf}"] = lo, hi
    if s.n <= LARGE_SAMPLE:
        block["note"] = f"n={s.n} <= {LARGE_SAMPLE}: normal approximation assumed"
    return block


def format_summary_table(blocks: dict[str, dict], digits: int = 4) -> str:
    """Aligned text table with one column per sample."""
    names = list(blocks)
    label_w = max(len(label) for label, _ in _ROWS)
    col_w = max([len(n) for n in names] + [digits + 6])
    lines = [" " * label_w + "".join(f"  {n:>{col_w}}" for n in names)]
    for label, key in _ROWS:
        cells = []
        for n in names:
            v = blocks[n].get(key)
            cells.append(f"  {v:>{col_w}.{digits}f}" if v is not None else f"  {'-':>{col_w}}")
        lines.append(f"{label:<{label_w}}" + "".join(cells))
    return "\n".join(lines)


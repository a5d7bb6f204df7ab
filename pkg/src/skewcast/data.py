"""Vintage ingestion, growth transforms and mixed-frequency alignment.

A vintage is the data exactly as available on one historical date:
quarterly GDP levels plus monthly levels of the related indicator. Levels
are turned into growth rates by log differences (quarter on quarter for
GDP, month on month or rolling quarterly for the related series) and laid
out on a common monthly grid with GDP growth occupying quarter-end months
only. The ragged edge, where the related series extends past the last
released GDP quarter, is preserved by the observation masks.

CSV layout (bit exact): header ``date,value``, dates ``YYYY-MM`` for
monthly series and ``YYYY-Qn`` for quarterly ones, one file per series
per vintage, vintage directories named ``YYYY-MM-DD``. Values are written
with nine significant digits.
"""

from __future__ import annotations

import csv
import io
import re
import urllib.request
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "MONTHLY_TAG",
    "NowcastStep",
    "ObservationPanel",
    "QUARTERLY_TAG",
    "ROLLING_TAG",
    "Series",
    "Vintage",
    "align_panel",
    "fetch_vintages",
    "growth_correlation",
    "load_vintage",
    "load_vintages",
    "log_diff",
    "month_index",
    "month_label",
    "month_quarter",
    "nowcast_schedule",
    "quarter_end_month",
    "quarter_index",
    "quarter_label",
    "read_series_csv",
    "write_series_csv",
    "write_vintage",
]

_MONTH_RE = re.compile(r"^(\d{4})-(\d{2})$")
_QUARTER_RE = re.compile(r"^(\d{4})-Q([1-4])$")
_DATE_RE = re.compile(r"^(\d{4})-(\d{2})-(\d{2})$")

QUARTERLY_TAG = "quarterly-at-month-3"
MONTHLY_TAG = "monthly"
ROLLING_TAG = "rolling-quarterly"

FLOAT_FMT = "%.9g"


def month_index(label: str) -> int:
    """Absolute month number of a YYYY-MM label (year*12 + month - 1)."""
    m = _MONTH_RE.match(label)
    if not m:
        raise ValueError(f"not a YYYY-MM month label: {label!r}")
    year, month = int(m.group(1)), int(m.group(2))
    if not (1 <= month <= 12):
        raise ValueError(f"month out of range in {label!r}")
    return year * 12 + month - 1


def month_label(index: int) -> str:
    return f"{index // 12:04d}-{index % 12 + 1:02d}"


def quarter_index(label: str) -> int:
    """Absolute quarter number of a YYYY-Qn label (year*4 + n - 1)."""
    m = _QUARTER_RE.match(label)
    if not m:
        raise ValueError(f"not a YYYY-Qn quarter label: {label!r}")
    return int(m.group(1)) * 4 + int(m.group(2)) - 1


def quarter_label(index: int) -> str:
    return f"{index // 4:04d}-Q{index % 4 + 1}"


def quarter_end_month(qi: int) -> int:
    """Absolute month number of the quarter's third month."""
    return (qi // 4) * 12 + (qi % 4) * 3 + 2


def month_quarter(mi: int) -> int:
    return mi // 3


def _is_quarter_end(mi: int) -> bool:
    return mi % 3 == 2


@dataclass(frozen=True)
class Series:
    """A contiguous dated level series, monthly or quarterly.

    Dates must advance by exactly one period per row; gaps would silently
    misalign the growth transforms, so they are rejected at construction.
    Levels must be strictly positive for the log transforms to exist.
    """

    dates: tuple
    values: np.ndarray

    def __post_init__(self):
        dates = tuple(self.dates)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)
        if len(dates) == 0:
            raise ValueError("empty series")
        if values.shape != (len(dates),):
            raise ValueError("dates and values must have equal length")
        if _MONTH_RE.match(dates[0]):
            idx = [month_index(d) for d in dates]
            freq = MONTHLY_TAG
        elif _QUARTER_RE.match(dates[0]):
            idx = [quarter_index(d) for d in dates]
            freq = "quarterly"
        else:
            raise ValueError(f"unrecognized date label {dates[0]!r}")
        for k in range(1, len(idx)):
            if idx[k] != idx[k - 1] + 1:
                raise ValueError(
                    f"series dates must be contiguous; gap before {dates[k]!r}"
                )
        if not np.all(np.isfinite(values)) or np.any(values <= 0.0):
            raise ValueError("levels must be finite and strictly positive")
        object.__setattr__(self, "frequency", freq)
        object.__setattr__(self, "start", idx[0])

    def __len__(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class Vintage:
    """One as-of-date snapshot: quarterly GDP levels, monthly related levels."""

    as_of: str
    gdp_levels: Series
    related_levels: Series

    def __post_init__(self):
        if not _DATE_RE.match(self.as_of):
            raise ValueError(f"as_of must be YYYY-MM-DD, got {self.as_of!r}")
        if self.gdp_levels.frequency != "quarterly":
            raise ValueError("gdp_levels must be a quarterly series")
        if self.related_levels.frequency != MONTHLY_TAG:
            raise ValueError("related_levels must be a monthly series")


def log_diff(levels, step: int = 1) -> np.ndarray:
    """ln(L_t) - ln(L_{t-step}); the first ``step`` entries are NaN."""
    levels = np.asarray(levels, dtype=float)
    if step < 1:
        raise ValueError("step must be a positive number of periods")
    if np.any(~np.isfinite(levels)) or np.any(levels <= 0.0):
        raise ValueError("levels must be finite and strictly positive")
    out = np.full(levels.shape, np.nan)
    if levels.size > step:
        logs = np.log(levels)
        out[step:] = logs[step:] - logs[:-step]
    return out


@dataclass
class ObservationPanel:
    """Two growth series on a common monthly grid with observation masks.

    Row 0 is GDP (present at quarter-end months only), row 1 the related
    indicator. ``mask[i, t] = 1`` exactly where ``y[i, t]`` is a real
    observation; missing slots hold NaN.
    """

    monthly_index: tuple
    y: np.ndarray
    mask: np.ndarray
    frequency_tags: tuple

    def __post_init__(self):
        self.monthly_index = tuple(self.monthly_index)
        self.y = np.asarray(self.y, dtype=float)
        self.mask = np.asarray(self.mask, dtype=np.uint8)
        n = len(self.monthly_index)
        if self.y.shape != (2, n) or self.mask.shape != (2, n):
            raise ValueError("y and mask must both be 2 x n_months")
        idx = [month_index(d) for d in self.monthly_index]
        for k in range(1, n):
            if idx[k] != idx[k - 1] + 1:
                raise ValueError("monthly_index must be contiguous")
        self._months = np.asarray(idx)
        observed = np.isfinite(self.y)
        if not np.array_equal(observed, self.mask.astype(bool)):
            raise ValueError("mask must flag exactly the finite entries of y")
        gdp_cols = self.mask[0].astype(bool)
        if np.any(gdp_cols & (self._months % 3 != 2)):
            raise ValueError("GDP observations are allowed at quarter ends only")
        if len(self.frequency_tags) != 2:
            raise ValueError("frequency_tags must name both series")

    @property
    def n_months(self) -> int:
        return len(self.monthly_index)

    @property
    def months(self) -> np.ndarray:
        """Absolute month numbers of the grid."""
        return self._months

    def position(self, month: str) -> int:
        mi = month_index(month)
        pos = mi - self._months[0]
        if not (0 <= pos < self.n_months):
            raise ValueError(f"month {month!r} outside the panel span")
        return int(pos)

    def last_observed_month(self, series: int) -> str | None:
        cols = np.flatnonzero(self.mask[series])
        if cols.size == 0:
            return None
        return self.monthly_index[cols[-1]]

    def restrict(
        self, gdp_through: str | None = None, related_through: str | None = None
    ) -> "ObservationPanel":
        """Copy with observations after the cutoffs masked out.

        ``gdp_through`` is a quarter label (inclusive), ``related_through``
        a month label (inclusive); None leaves that series untouched.
        """
        y = self.y.copy()
        mask = self.mask.copy()
        if gdp_through is not None:
            limit = quarter_end_month(quarter_index(gdp_through))
            drop = self._months > limit
            y[0, drop] = np.nan
            mask[0, drop] = 0
        if related_through is not None:
            limit = month_index(related_through)
            drop = self._months > limit
            y[1, drop] = np.nan
            mask[1, drop] = 0
        return ObservationPanel(self.monthly_index, y, mask, self.frequency_tags)


def align_panel(v: Vintage, spec) -> ObservationPanel:
    """Lay out a vintage's growth rates on the common monthly grid.

    GDP growth (quarter on quarter) lands at quarter-end months. The
    related series enters month on month or as rolling quarterly growth
    per the spec; rolling values exist only where all three underlying
    months are in the vintage, which the 3-step log difference enforces.
    """
    gdp_growth = log_diff(v.gdp_levels.values, 1)
    rel_step = 3 if spec.related_frequency == "rolling_quarterly" else 1
    rel_growth = log_diff(v.related_levels.values, rel_step)
    rel_tag = ROLLING_TAG if rel_step == 3 else MONTHLY_TAG

    q0 = v.gdp_levels.start
    gdp_months = [quarter_end_month(q0 + k) for k in range(len(v.gdp_levels))]
    m0 = v.related_levels.start
    rel_months = [m0 + k for k in range(len(v.related_levels))]

    start = min(gdp_months[0] - 2, rel_months[0])
    stop = max(gdp_months[-1], rel_months[-1])
    n = stop - start + 1
    y = np.full((2, n), np.nan)
    mask = np.zeros((2, n), dtype=np.uint8)
    for k, mi in enumerate(gdp_months):
        if np.isfinite(gdp_growth[k]):
            y[0, mi - start] = gdp_growth[k]
            mask[0, mi - start] = 1
    for k, mi in enumerate(rel_months):
        if np.isfinite(rel_growth[k]):
            y[1, mi - start] = rel_growth[k]
            mask[1, mi - start] = 1
    index = tuple(month_label(mi) for mi in range(start, stop + 1))
    return ObservationPanel(index, y, mask, (QUARTERLY_TAG, rel_tag))


def growth_correlation(v: Vintage) -> float:
    """Calendar-quarter growth correlation between the two series.

    The related series is aggregated to quarterly levels by 3-month sums,
    then both are log-differenced quarter on quarter over the common
    quarters. Outside the [0.6, 1.0] band a diagnostic warning is issued;
    this never fails hard.
    """
    m0 = v.related_levels.start
    vals = v.related_levels.values
    first_q = -(-m0 // 3)  # first quarter fully inside the series
    start_off = first_q * 3 - m0
    n_q = (len(vals) - start_off) // 3
    if n_q < 3:
        raise ValueError("need at least 3 complete quarters of related data")
    sums = vals[start_off : start_off + 3 * n_q].reshape(n_q, 3).sum(axis=1)
    rel_growth = log_diff(sums, 1)
    gdp_growth = log_diff(v.gdp_levels.values, 1)
    q0 = v.gdp_levels.start
    lo = max(q0, first_q)
    hi = min(q0 + len(gdp_growth), first_q + n_q)
    a = gdp_growth[lo - q0 : hi - q0]
    b = rel_growth[lo - first_q : hi - first_q]
    keep = np.isfinite(a) & np.isfinite(b)
    if keep.sum() < 3:
        raise ValueError("fewer than 3 overlapping quarters of growth")
    corr = float(np.corrcoef(a[keep], b[keep])[0, 1])
    if not (0.6 <= corr <= 1.0):
        warnings.warn(
            f"quarterly growth correlation {corr:.3f} outside the expected "
            "[0.6, 1.0] band; check series pairing",
            stacklevel=2,
        )
    return corr


@dataclass(frozen=True)
class NowcastStep:
    """One information set in the four-step nowcasting window.

    ``step`` counts down: 4 right after the previous quarter's GDP release
    late in the target quarter's first month, then 3..1 as each new month
    of the related series arrives, step 1 being the final set roughly four
    weeks before the target release.
    """

    step: int
    target: str
    timing: str
    related_through: str
    gdp_through: str


def nowcast_schedule(target_quarter: str) -> list:
    """The four step descriptors for one target quarter, in time order."""
    qi = quarter_index(target_quarter)
    m1 = quarter_end_month(qi) - 2
    prev_q = quarter_label(qi - 1)
    out = []
    for step in (4, 3, 2, 1):
        k = 4 - step  # months of the target quarter already observed
        timing = f"late {month_label(m1)}" if step == 4 else f"early {month_label(m1 + k)}"
        out.append(
            NowcastStep(
                step=step,
                target=target_quarter,
                timing=timing,
                related_through=month_label(m1 + k - 1),
                gdp_through=prev_q,
            )
        )
    return out


def read_series_csv(source, name: str = "series") -> Series:
    """Parse one ``date,value`` CSV into a Series.

    ``source`` is a path or an open text stream. Malformed content is
    rejected with the offending row number.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ["date", "value"]:
        raise ValueError(f"{name}: first row must be the header 'date,value'")
    dates = []
    values = []
    for k, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2:
            raise ValueError(f"{name}: row {k} must have 2 fields, got {len(row)}")
        date = row[0].strip()
        if not (_MONTH_RE.match(date) or _QUARTER_RE.match(date)):
            raise ValueError(f"{name}: row {k} has unrecognized date {date!r}")
        try:
            value = float(row[1])
        except ValueError:
            raise ValueError(
                f"{name}: row {k} has non-numeric value {row[1]!r}"
            ) from None
        dates.append(date)
        values.append(value)
    if not dates:
        raise ValueError(f"{name}: no data rows")
    try:
        return Series(tuple(dates), np.array(values))
    except ValueError as exc:
        raise ValueError(f"{name}: {exc}") from None


def write_series_csv(path, series: Series) -> None:
    lines = ["date,value"]
    for date, value in zip(series.dates, series.values):
        lines.append(f"{date},{FLOAT_FMT % value}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_vintage(directory) -> Vintage:
    """Read one vintage directory (``YYYY-MM-DD/{gdp,related}.csv``)."""
    directory = Path(directory)
    as_of = directory.name
    gdp = read_series_csv(directory / "gdp.csv", name=f"{as_of}/gdp.csv")
    rel = read_series_csv(directory / "related.csv", name=f"{as_of}/related.csv")
    return Vintage(as_of=as_of, gdp_levels=gdp, related_levels=rel)


def load_vintages(root) -> list:
    """All vintage subdirectories of ``root``, sorted by as-of date."""
    root = Path(root)
    dirs = sorted(p for p in root.iterdir() if p.is_dir() and _DATE_RE.match(p.name))
    return [load_vintage(p) for p in dirs]


def write_vintage(root, vintage: Vintage) -> Path:
    directory = Path(root) / vintage.as_of
    directory.mkdir(parents=True, exist_ok=True)
    write_series_csv(directory / "gdp.csv", vintage.gdp_levels)
    write_series_csv(directory / "related.csv", vintage.related_levels)
    return directory


def fetch_vintages(endpoint: str, dates) -> tuple:
    """Fetch per-as-of-date CSV pairs from a URL template.

    ``endpoint`` contains ``{date}`` and ``{series}`` placeholders (series
    is ``gdp`` or ``related``); any scheme urllib supports works, so
    ``file://`` trees serve as offline endpoints. Returns the parsed
    vintages plus a list of per-vintage error strings; failures never
    abort the remaining dates.
    """
    if "{date}" not in endpoint or "{series}" not in endpoint:
        raise ValueError("endpoint template needs {date} and {series} placeholders")
    vintages = []
    errors = []
    for as_of in dates:
        try:
            parts = {}
            for series in ("gdp", "related"):
                url = endpoint.format(date=as_of, series=series)
                with urllib.request.urlopen(url) as resp:
                    text = resp.read().decode("utf-8")
                parts[series] = read_series_csv(
                    io.StringIO(text), name=f"{as_of}/{series}"
                )
            vintages.append(
                Vintage(
                    as_of=as_of,
                    gdp_levels=parts["gdp"],
                    related_levels=parts["related"],
                )
            )
        except Exception as exc:  # noqa: BLE001 - per-vintage fault isolation
            errors.append(f"{as_of}: {exc}")
    return vintages, errors

"""Correlation-based feature pruning.

Pearson correlations are computed with population moments. Columns are then
scanned in ascending index order and a column is kept only if its absolute
correlation with every already-kept column is at most the threshold, so the
kept set is pairwise ``|r| <= threshold`` by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, FormatError, ShapeError

_CONST_RTOL = 1e-12


def _is_constant(std, scale):
    return std <= _CONST_RTOL * (1.0 + scale)


def pearson_r(x, y):
    """Pearson r of two vectors; 0.0 when either vector is constant."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or x.shape != y.shape:
        raise ShapeError(f"vectors must be 1-D with equal length, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise ShapeError("need at least 2 observations")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = np.sqrt(np.mean(xc * xc))
    sy = np.sqrt(np.mean(yc * yc))
    if _is_constant(sx, np.abs(x).max()) or _is_constant(sy, np.abs(y).max()):
        return 0.0
    r = np.mean(xc * yc) / (sx * sy)
    return float(np.clip(r, -1.0, 1.0))


@dataclass
class CorrelationMatrix:
    values: np.ndarray
    constant: np.ndarray

    @property
    def col_count(self):
        return self.values.shape[0]

    def off_diagonal_abs(self):
        a = np.abs(self.values)
        return a[~np.eye(self.col_count, dtype=bool)]


def correlation_matrix(data):
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise ShapeError("data must be a 2-D matrix")
    if data.shape[0] < 2:
        raise ShapeError("need at least 2 rows to correlate")
    n = data.shape[0]
    centered = data - data.mean(axis=0)
    cov = centered.T @ centered / n
    std = np.sqrt(np.diag(cov).copy())
    constant = _is_constant(std, np.abs(data).max(axis=0))
    safe = np.where(constant, 1.0, std)
    r = cov / safe[:, None] / safe[None, :]
    r = np.clip(r, -1.0, 1.0)
    r[constant, :] = 0.0
    r[:, constant] = 0.0
    # float noise breaks exact symmetry of the matmul result otherwise
    r = np.triu(r, 1)
    r = r + r.T
    np.fill_diagonal(r, np.where(constant, 0.0, 1.0))
    return CorrelationMatrix(r, constant)


@dataclass
class FeatureMask:
    keep: np.ndarray
    threshold: float

    def __post_init__(self):
        self.keep = np.asarray(self.keep, dtype=bool)
        if self.keep.ndim != 1:
            raise ShapeError("mask must be a 1-D boolean vector")
        if not self.keep.any():
            raise ShapeError("a mask must keep at least one column")

    @property
    def kept_count(self):
        return int(self.keep.sum())

    @property
    def dropped_count(self):
        return int(self.keep.size - self.keep.sum())

    @property
    def kept_indices(self):
        return np.flatnonzero(self.keep)

    @classmethod
    def keep_all(cls, n):
        return cls(np.ones(n, dtype=bool), 1.0)


def drwcc_prune(corr, threshold):
    if not 0 < threshold < 1:
        raise ConfigError("threshold must lie strictly between 0 and 1")
    a = np.abs(corr.values)
    n = a.shape[0]
    keep = np.zeros(n, dtype=bool)
    for j in range(n):
        if not (a[j, keep] > threshold).any():
            keep[j] = True
    return FeatureMask(keep, threshold)


def apply_feature_mask(data, mask):
    data = np.asarray(data)
    if data.ndim != 2 or data.shape[1] != mask.keep.size:
        raise ShapeError(f"mask covers {mask.keep.size} columns, data has shape {data.shape}")
    return data[:, mask.keep]


def correlation_summary(corr, threshold):
    """Counts and magnitudes used in the analysis report."""
    a = np.abs(corr.values)
    off = ~np.eye(corr.col_count, dtype=bool)
    above = (a > threshold) & off
    vals = a[off]
    return {
        "columns": corr.col_count,
        "constant_columns": int(corr.constant.sum()),
        "max_abs_r": float(vals.max()) if vals.size else 0.0,
        "mean_abs_r": float(vals.mean()) if vals.size else 0.0,
        "pairs_above_threshold": int(above.sum() // 2),
        "columns_with_partner_above_threshold": int(above.any(axis=1).sum()),
    }


# -- mask file -------------------------------------------------------------
#
#   # ihards feature mask
#   version=1
#   threshold=0.9
#   columns=571
#   kept_count=251
#   kept=0-3,7,9-12
#
# ``kept`` lists kept column indices as ascending comma-separated ranges.

MASK_VERSION = 1


def _ranges(indices):
    out = []
    start = prev = None
    for i in indices:
        if start is None:
            start = prev = i
        elif i == prev + 1:
            prev = i
        else:
            out.append((start, prev))
            start = prev = i
    if start is not None:
        out.append((start, prev))
    return ",".join(str(a) if a == b else f"{a}-{b}" for a, b in out)


def format_mask(mask):
    lines = [
        "# ihards feature mask",
        f"version={MASK_VERSION}",
        f"threshold={mask.threshold!r}",
        f"columns={mask.keep.size}",
        f"kept_count={mask.kept_count}",
        f"kept={_ranges(int(i) for i in mask.kept_indices)}",
    ]
    return "\n".join(lines) + "\n"


def parse_mask(text):
    fields = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise FormatError(f"mask line without '=': {line!r}")
        fields[key.strip()] = value.strip()
    try:
        version = int(fields["version"])
        columns = int(fields["columns"])
        threshold = float(fields["threshold"])
        kept_count = int(fields["kept_count"])
        spec = fields["kept"]
    except (KeyError, ValueError) as exc:
        raise FormatError(f"incomplete or invalid mask file ({exc})") from None
    if version > MASK_VERSION:
        raise FormatError(f"mask version {version} not supported")
    keep = np.zeros(columns, dtype=bool)
    for part in filter(None, spec.split(",")):
        lo, _, hi = part.partition("-")
        try:
            a, b = int(lo), int(hi or lo)
        except ValueError:
            raise FormatError(f"bad range {part!r}") from None
        if not 0 <= a <= b < columns:
            raise FormatError(f"range {part!r} outside 0..{columns - 1}")
        keep[a : b + 1] = True
    if int(keep.sum()) != kept_count:
        raise FormatError(f"kept_count={kept_count} but ranges list {int(keep.sum())} columns")
    return FeatureMask(keep, threshold)


def save_mask(path, mask):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_mask(mask))


def load_mask(path):
    with open(path, encoding="utf-8") as fh:
        return parse_mask(fh.read())

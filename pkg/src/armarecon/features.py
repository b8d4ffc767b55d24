"""Per-ROI FA histogram features.

Each subject becomes one row of ``p * q`` values: for each of ``p`` atlas
regions, the normalized histogram of its FA voxels over ``q`` equal-width
bins on [0, 1].
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import DataError, InputRangeError
from .nifti import Volume, load_nifti

FA_TOLERANCE = 1e-6


class EmptyRoiWarning(UserWarning):
    pass


@dataclass
class FeatureMatrix:
    data: np.ndarray
    labels: np.ndarray
    subject_ids: list[str]
    p: int
    q: int
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.subject_ids = [str(s) for s in self.subject_ids]
        n = self.data.shape[0]
        if self.data.ndim != 2 or self.data.shape[1] != self.p * self.q:
            raise DataError(f"feature matrix shape {self.data.shape} != (n, {self.p}*{self.q})")
        if self.labels.shape != (n,) or len(self.subject_ids) != n:
            raise DataError("labels and subject_ids must have one entry per row")
        if not np.all(np.isin(self.labels, (0, 1))):
            raise DataError("labels must be 0 or 1")

    @property
    def n(self) -> int:
        return self.data.shape[0]

    def blocks(self) -> np.ndarray:
        """View as (n, p, q)."""
        return self.data.reshape(self.n, self.p, self.q)


def roi_histogram(values, q: int) -> np.ndarray:
    """Normalized histogram of FA values over ``q`` equal bins on [0, 1].

    Bin ``i`` is ``[i/q, (i+1)/q)``; the last bin is closed so 1.0 lands in
    it. Counts are divided by the number of values; an empty input gives
    all zeros.
    """
    if q < 1:
        raise DataError(f"q must be >= 1, got {q}")
    v = np.asarray(values, dtype=np.float64).ravel()
    bad = ~(np.isfinite(v) & (v >= 0.0) & (v <= 1.0))
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise InputRangeError(i, float(v[i]))
    bins = np.zeros(q)
    if v.size == 0:
        return bins
    idx = np.minimum(np.floor(v * q).astype(np.int64), q - 1)
    return np.bincount(idx, minlength=q) / v.size


def subject_features(fa: Volume, atlas: Volume, roi_ids, q: int) -> np.ndarray:
    """Concatenated ROI histograms for one subject, in ``roi_ids`` order."""
    if tuple(fa.dims) != tuple(atlas.dims):
        raise DataError(f"FA dims {fa.dims} do not match atlas dims {atlas.dims}")
    roi_ids = list(roi_ids)
    if len(set(roi_ids)) != len(roi_ids):
        raise DataError(f"roi_ids must be distinct: {roi_ids}")
    values = fa.voxels
    out_of_range = (values < -FA_TOLERANCE) | (values > 1.0 + FA_TOLERANCE)
    labels = atlas.voxels
    blocks = []
    for roi in roi_ids:
        mask = labels == roi
        if np.any(out_of_range & mask):
            i = int(np.flatnonzero(out_of_range & mask)[0])
            raise InputRangeError(i, float(values[i]),
                                  f"FA value {values[i]!r} at voxel {i} (roi {roi}) "
                                  "is not a fractional anisotropy")
        if not mask.any():
            warnings.warn(f"roi {roi} is absent from the atlas; using a zero block",
                          EmptyRoiWarning, stacklevel=2)
        blocks.append(roi_histogram(np.clip(values[mask], 0.0, 1.0), q))
    return np.concatenate(blocks) if blocks else np.zeros(0)


def synth_cohort(n: int, p: int = 9, q: int = 20, class_shift: float = 0.15,
                 noise: float = 0.05, seed: int = 0, voxels_per_roi: int = 400,
                 voxel_sd: float = 0.1, base_fa: float = 0.5) -> FeatureMatrix:
    """Synthetic two-class cohort of FA histograms.

    Subject ``i`` in ROI ``j`` has a mean FA drawn from
    ``N(base_fa - label * class_shift, noise)``; its voxels are drawn from a
    normal truncated to [0, 1] around that mean with spread ``voxel_sd``.
    The first ``n // 2`` subjects are class 0.
    """
    if n < 4 or n % 2:
        raise DataError(f"n must be an even number >= 4, got {n}")
    if not 0.0 <= class_shift <= 0.5:
        raise DataError(f"class_shift must be in [0, 0.5], got {class_shift}")
    if noise < 0 or voxel_sd <= 0 or voxels_per_roi < 1:
        raise DataError("noise must be >= 0, voxel_sd > 0 and voxels_per_roi >= 1")
    rng = np.random.default_rng(seed)
    labels = np.repeat([0, 1], n // 2)
    centers = base_fa - labels[:, None] * class_shift + noise * rng.standard_normal((n, p))
    centers = np.clip(centers, 0.0, 1.0)[..., None]
    a = (0.0 - centers) / voxel_sd
    b = (1.0 - centers) / voxel_sd
    fa = stats.truncnorm.rvs(a, b, loc=centers, scale=voxel_sd,
                             size=(n, p, voxels_per_roi), random_state=rng)
    fa = np.clip(fa, 0.0, 1.0)
    data = np.stack([np.concatenate([roi_histogram(fa[i, j], q) for j in range(p)])
                     for i in range(n)])
    ids = [f"sub-{i:04d}" for i in range(n)]
    return FeatureMatrix(data=data, labels=labels, subject_ids=ids, p=p, q=q)


def _feature_names(width: int) -> list[str]:
    digits = max(3, len(str(width - 1)))
    return [f"f{i:0{digits}d}" for i in range(width)]


def feature_csv_text(fm: FeatureMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["subject_id", "label", *_feature_names(fm.p * fm.q)])
    for sid, lab, row in zip(fm.subject_ids, fm.labels, fm.data):
        w.writerow([sid, int(lab), *(format(float(x), ".17g") for x in row)])
    return buf.getvalue()


def write_feature_csv(fm: FeatureMatrix, path):
    Path(path).write_text(feature_csv_text(fm))


def read_feature_csv(path, q: int = 20) -> FeatureMatrix:
    """Read a feature CSV. ``q`` is needed to recover the ROI block layout."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"feature file not found: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:2] != ["subject_id", "label"]:
        raise DataError(f"{path}: missing 'subject_id,label,...' header")
    width = len(rows[0]) - 2
    if width % q:
        raise DataError(f"{path}: {width} feature columns is not a multiple of q={q}")
    ids, labels, data = [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != width + 2:
            raise DataError(f"{path}:{lineno}: expected {width + 2} fields, got {len(row)}")
        try:
            ids.append(row[0])
            labels.append(int(row[1]))
            data.append([float(x) for x in row[2:]])
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from None
    return FeatureMatrix(data=np.array(data).reshape(len(ids), width), labels=labels,
                         subject_ids=ids, p=width // q, q=q)


def read_cohort_manifest(path) -> list[tuple[str, int, Path, Path]]:
    """Parse ``subject_id,label,fa_path,atlas_path`` lines.

    Relative paths resolve against the manifest's directory. Blank lines and
    ``#`` comments are skipped.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"manifest not found: {path}")
    entries = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [s.strip() for s in line.split(",")]
        if len(parts) != 4:
            raise DataError(f"{path}:{lineno}: expected 4 comma-separated fields")
        sid, label, fa, atlas = parts
        try:
            label = int(label)
        except ValueError:
            raise DataError(f"{path}:{lineno}: label {label!r} is not an integer") from None
        entries.append((sid, label, path.parent / fa, path.parent / atlas))
    return entries


def extract_cohort_features(manifest_path, roi_ids, q: int = 20) -> FeatureMatrix:
    ids, labels, rows, notes = [], [], [], []
    for sid, label, fa_path, atlas_path in read_cohort_manifest(manifest_path):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", EmptyRoiWarning)
            row = subject_features(load_nifti(fa_path), load_nifti(atlas_path), roi_ids, q)
        notes.extend(f"{sid}: {w.message}" for w in caught)
        ids.append(sid)
        labels.append(label)
        rows.append(row)
    if not rows:
        raise DataError(f"manifest {manifest_path} lists no subjects")
    for note in notes:
        warnings.warn(note, EmptyRoiWarning, stacklevel=2)
    return FeatureMatrix(data=np.stack(rows), labels=labels, subject_ids=ids,
                         p=len(list(roi_ids)), q=q, warnings=notes)

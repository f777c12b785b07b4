"""Image-quality-assessment harness: NLPD against mean opinion scores."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import DisplayModel, LuminanceImage, as_array
from .errors import ConfigurationError, DimensionError, FormatError, NlpRenderError
from .metric import Nlpd
from .transform import NlpParams

log = logging.getLogger(__name__)


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise DimensionError("pearson needs two 1-D sequences of equal length >= 2")
    dx = x - x.mean()
    dy = y - y.mean()
    den = np.sqrt(np.dot(dx, dx) * np.dot(dy, dy))
    if den == 0.0:
        return float("nan")
    return float(np.dot(dx, dy) / den)


def rankdata(x) -> np.ndarray:
    """1-based ranks, ties get the average of the ranks they span."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    ranks = np.empty(x.size)
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and xs[j + 1] == xs[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    return pearson(rankdata(x), rankdata(y))


@dataclass
class IqaManifest:
    entries: list  # (reference_path, distorted_path, mos)
    display: DisplayModel = field(default_factory=DisplayModel)

    @classmethod
    def from_csv(cls, path, display: DisplayModel | None = None) -> "IqaManifest":
        path = Path(path)
        base = path.parent
        entries = []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["reference", "distorted", "mos"]:
                raise ConfigurationError(f"{path}: header must be 'reference,distorted,mos'")
            for lineno, row in enumerate(reader, start=2):
                try:
                    mos = float(row["mos"])
                except (TypeError, ValueError):
                    raise ConfigurationError(f"{path}:{lineno}: mos is not a number") from None
                if not np.isfinite(mos):
                    raise ConfigurationError(f"{path}:{lineno}: mos must be finite")
                entries.append((base / row["reference"].strip(), base / row["distorted"].strip(), mos))
        return cls(entries, display or DisplayModel())


@dataclass
class IqaResult:
    pearson: float
    spearman: float
    n: int
    skipped: int
    scores: list  # (distorted_path, nlpd, mos)

    def to_dict(self) -> dict:
        return {"pearson": self.pearson, "spearman": self.spearman, "n": self.n, "skipped": self.skipped}


def score_database(manifest: IqaManifest, params: NlpParams | None = None) -> IqaResult:
    """Correlate -NLPD with MOS over the manifest (no logistic fitting)."""
    from .fileio import load_image

    refs: dict = {}
    scores = []
    skipped = 0
    for ref_path, dist_path, mos in manifest.entries:
        try:
            if ref_path not in refs:
                refs[ref_path] = Nlpd(load_image(ref_path, display=manifest.display), params)
            d = refs[ref_path](load_image(dist_path, display=manifest.display))
        except (OSError, FormatError, NlpRenderError) as exc:
            log.warning("skipping %s: %s", dist_path, exc)
            skipped += 1
            continue
        scores.append((str(dist_path), d, mos))
    if len(scores) < 2:
        return IqaResult(float("nan"), float("nan"), len(scores), skipped, scores)
    q = -np.array([s[1] for s in scores])
    m = np.array([s[2] for s in scores])
    return IqaResult(pearson(q, m), spearman(q, m), len(scores), skipped, scores)


def noise_distances(reference, amplitudes, seed: int = 0, params: NlpParams | None = None) -> list[float]:
    """NLPD between ``reference`` and noisy copies of it.

    Amplitudes are noise standard deviations as fractions of the reference's
    dynamic range; the same unit-variance noise field is scaled for every
    amplitude and the result clipped to the reference's range.
    """
    ref = as_array(reference)
    lo, hi = float(ref.min()), float(ref.max())
    noise = np.random.default_rng(seed).standard_normal(ref.shape)
    metric = Nlpd(ref, params)
    return [metric(np.clip(ref + a * (hi - lo) * noise, lo, hi)) for a in amplitudes]


def noise_monotonicity_check(reference: LuminanceImage, amplitudes, seed: int = 0, params=None) -> bool:
    amps = [float(a) for a in amplitudes]
    if len(amps) < 3:
        raise ConfigurationError("need at least 3 amplitudes")
    if any(b <= a for a, b in zip(amps, amps[1:])):
        raise ConfigurationError(f"amplitudes must be strictly increasing, got {amps}")
    d = noise_distances(reference, amps, seed, params)
    return all(b > a for a, b in zip(d, d[1:]))

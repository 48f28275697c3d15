"""Sequence-level style statistics and their one-hot reference encodings.

Nine statistics describe a melody: range, average, and sample variance of
each of pitch, duration, and rest. During training they are discretized by
per-feature uniform k-bin encoders fitted on the training split; at
inference, normalized control values in [0, 1] map linearly back onto the
observed feature span and through the same bins, giving users a direct
handle on the style of generated melodies.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, fields
from typing import Iterable, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .notes import ATTRIBUTES, MelodySequence

FEATURE_KEYS = (
    "pitch.range",
    "pitch.avg",
    "pitch.var",
    "duration.range",
    "duration.avg",
    "duration.var",
    "rest.range",
    "rest.avg",
    "rest.var",
)

# variance bin counts are fixed; averages of duration/rest get 10 bins
# because those attributes have far fewer classes than pitch
_VARIANCE_BINS = {"pitch": 30, "duration": 20, "rest": 20}
_FIXED_AVG_BINS = {"duration": 10, "rest": 10}


@dataclass(frozen=True)
class StyleFeatures:
    """The nine per-melody statistics, in attribute units."""

    pitch_range: float
    pitch_avg: float
    pitch_var: float
    duration_range: float
    duration_avg: float
    duration_var: float
    rest_range: float
    rest_avg: float
    rest_var: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=np.float64)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(FEATURE_KEYS, self.as_array().tolist()))

    @staticmethod
    def from_array(values: Sequence[float]) -> "StyleFeatures":
        values = list(values)
        if len(values) != 9:
            raise ValueError(f"expected nine feature values, got {len(values)}")
        return StyleFeatures(*[float(v) for v in values])


def extract_style_features(melody: MelodySequence) -> StyleFeatures:
    """Range, mean, and sample variance (divisor T-1) of each attribute."""
    if len(melody) < 2:
        raise ValueError("style features need at least 2 notes (sample variance)")
    out = []
    for attr in ATTRIBUTES:
        vals = melody.values(attr)
        out += [float(vals.max() - vals.min()), float(vals.mean()), float(vals.var(ddof=1))]
    return StyleFeatures(*out)


@dataclass(frozen=True)
class FeatureBinner:
    """Uniform left-closed bins over the observed range of one feature."""

    feature: str
    bin_count: int
    vmin: float
    vmax: float

    def __post_init__(self):
        if self.bin_count < 1:
            raise ValueError("bin_count must be >= 1")
        if self.vmax < self.vmin:
            raise ValueError("vmax must be >= vmin")

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.vmin, self.vmax, self.bin_count + 1)

    def bin_of(self, value: float) -> int:
        """Bin index in 0..k-1; out-of-range values clamp to the edge bins."""
        span = self.vmax - self.vmin
        # snap values a few ulps below an edge up onto it, so a feature
        # reconstructed through the normalized-control path lands in the
        # same bin as the raw feature it came from
        atol = max(span, 1.0) * 1e-12
        idx = int(np.searchsorted(self.edges, value + atol, side="right")) - 1
        return min(max(idx, 0), self.bin_count - 1)

    def one_hot(self, value: float) -> np.ndarray:
        out = np.zeros(self.bin_count, dtype=np.float64)
        out[self.bin_of(value)] = 1.0
        return out

    def denormalize(self, v: float) -> float:
        """Map a normalized control in [0, 1] onto the observed span."""
        return self.vmin + float(v) * (self.vmax - self.vmin)

    def to_manifest(self) -> dict:
        return {
            "feature": self.feature,
            "bin_count": self.bin_count,
            "vmin": self.vmin,
            "vmax": self.vmax,
        }

    @staticmethod
    def from_manifest(data: dict) -> "FeatureBinner":
        return FeatureBinner(data["feature"], int(data["bin_count"]), data["vmin"], data["vmax"])


@dataclass(frozen=True)
class StyleVector:
    """Per-branch concatenated one-hots: [range | average | variance]."""

    pitch: np.ndarray
    duration: np.ndarray
    rest: np.ndarray

    def branch(self, attribute: str) -> np.ndarray:
        return getattr(self, attribute)

    def full(self) -> np.ndarray:
        return np.concatenate([self.pitch, self.duration, self.rest])


def _bin_count_for(feature: str, values: np.ndarray) -> int:
    attr, stat = feature.split(".")
    span = float(values.max() - values.min())
    if stat == "var":
        return _VARIANCE_BINS[attr]
    if stat == "avg" and attr in _FIXED_AVG_BINS:
        return _FIXED_AVG_BINS[attr]
    # range features and the pitch average use the observed span, rounded
    k = int(round(span))
    return max(k, 1)


class StyleEncoder(BaseEstimator, TransformerMixin):
    """Fits the nine feature binners and encodes melodies as style vectors.

    ``fit`` expects the filtered training split (anything yielding
    :class:`StyleFeatures` or melodies); ``transform`` maps features to
    :class:`StyleVector` one-hot concatenations. Degenerate features
    (max == min in training) collapse to a single bin with a warning.
    """

    def fit(self, X: Iterable, y=None) -> "StyleEncoder":
        features = [self._as_features(x) for x in X]
        if not features:
            raise ValueError("cannot fit a style encoder on an empty corpus")
        matrix = np.stack([f.as_array() for f in features])
        self.binners_ = {}
        for col, key in enumerate(FEATURE_KEYS):
            values = matrix[:, col]
            vmin, vmax = float(values.min()), float(values.max())
            if vmax == vmin:
                warnings.warn(
                    f"feature {key} is constant ({vmin}) in the training set; using a single bin"
                )
                self.binners_[key] = FeatureBinner(key, 1, vmin, vmax)
                continue
            self.binners_[key] = FeatureBinner(key, _bin_count_for(key, values), vmin, vmax)
        return self

    @staticmethod
    def _as_features(x) -> StyleFeatures:
        if isinstance(x, StyleFeatures):
            return x
        if isinstance(x, MelodySequence):
            return extract_style_features(x)
        if hasattr(x, "melody"):
            return x.style if isinstance(x.style, StyleFeatures) else extract_style_features(x.melody)
        raise TypeError(f"cannot extract style features from {type(x).__name__}")

    def _check_fitted(self):
        if not hasattr(self, "binners_"):
            raise RuntimeError("StyleEncoder is not fitted; call fit() first")

    def encode(self, features: StyleFeatures) -> StyleVector:
        self._check_fitted()
        parts = {}
        for attr in ATTRIBUTES:
            onehots = [
                self.binners_[f"{attr}.{stat}"].one_hot(getattr(features, f"{attr}_{stat}"))
                for stat in ("range", "avg", "var")
            ]
            parts[attr] = np.concatenate(onehots)
        return StyleVector(**parts)

    def transform(self, X: Iterable) -> list[StyleVector]:
        return [self.encode(self._as_features(x)) for x in X]

    def encode_controls(self, controls: Mapping[str, float] | Sequence[float]) -> StyleVector:
        """Map nine normalized controls in [0, 1] through the fitted bins.

        Each value is linearly mapped onto the observed training span of its
        feature, then discretized by the same binner used during training.
        """
        self._check_fitted()
        if not isinstance(controls, Mapping):
            controls = dict(zip(FEATURE_KEYS, controls))
        unknown = set(controls) - set(FEATURE_KEYS)
        if unknown:
            raise KeyError(f"unknown style controls: {sorted(unknown)}")
        values = []
        for key in FEATURE_KEYS:
            v = float(controls.get(key, 0.5))
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"control {key}={v} outside [0, 1]")
            values.append(self.binners_[key].denormalize(v))
        return self.encode(StyleFeatures.from_array(values))

    def normalize(self, features: StyleFeatures) -> dict[str, float]:
        """Min-max normalize raw features onto the fitted spans (clipped)."""
        self._check_fitted()
        out = {}
        for key, value in zip(FEATURE_KEYS, features.as_array()):
            b = self.binners_[key]
            span = b.vmax - b.vmin
            out[key] = float(np.clip((value - b.vmin) / span if span else 0.0, 0.0, 1.0))
        return out

    def branch_sizes(self) -> dict[str, int]:
        self._check_fitted()
        return {
            attr: sum(self.binners_[f"{attr}.{stat}"].bin_count for stat in ("range", "avg", "var"))
            for attr in ATTRIBUTES
        }

    def to_manifest(self) -> dict:
        self._check_fitted()
        return {"binners": [self.binners_[k].to_manifest() for k in FEATURE_KEYS]}

    @staticmethod
    def from_manifest(data: dict) -> "StyleEncoder":
        enc = StyleEncoder()
        enc.binners_ = {b["feature"]: FeatureBinner.from_manifest(b) for b in data["binners"]}
        missing = set(FEATURE_KEYS) - set(enc.binners_)
        if missing:
            raise ValueError(f"style encoder manifest missing features {sorted(missing)}")
        return enc

"""Affine map-error model and ensemble statistics.

Each map feature is perturbed by a random affine map: a 2x2 transform
(rotation * isotropic scale * shear, applied about the feature centroid)
plus a Gaussian translation. Drawing N such perturbations per feature
yields a feature ensemble from which distance and occupancy statistics
are estimated by moment matching.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .geo import Geometry, TypedFeatureSet

_IDENTITY = np.eye(2)


class ConfigurationError(ValueError):
    """Missing or inconsistent error-model configuration."""


@dataclass(frozen=True)
class ErrorParams:
    """Error parameters for one feature type.

    translation_mean/translation_cov parameterize the Gaussian offset in
    meters / meters^2; the three sigmas are standard deviations of the
    rotation angle (radians), isotropic scale (about 1), and shear factor.
    """

    translation_mean: np.ndarray
    translation_cov: np.ndarray
    rotation_sigma: float = 0.0
    scale_sigma: float = 0.0
    shear_sigma: float = 0.0

    def __post_init__(self) -> None:
        mean = np.array(self.translation_mean, dtype=np.float64).reshape(2)
        cov = np.array(self.translation_cov, dtype=np.float64).reshape(2, 2)
        if not np.allclose(cov, cov.T, atol=1e-12):
            raise ConfigurationError("translation covariance must be symmetric")
        eigenvalues = np.linalg.eigvalsh(cov)
        if eigenvalues.min() < -1e-9:
            raise ConfigurationError("translation covariance must be positive semi-definite")
        for name in ("rotation_sigma", "scale_sigma", "shear_sigma"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be >= 0")
        values, vectors = np.linalg.eigh(cov)
        sqrt = vectors @ np.diag(np.sqrt(np.clip(values, 0.0, None))) @ vectors.T
        for array in (mean, cov, sqrt):
            array.flags.writeable = False
        object.__setattr__(self, "translation_mean", mean)
        object.__setattr__(self, "translation_cov", cov)
        object.__setattr__(self, "_cov_sqrt", sqrt)

    def cov_sqrt(self) -> np.ndarray:
        """Symmetric PSD square root of the translation covariance."""
        return self._cov_sqrt  # type: ignore[attr-defined]


ZERO_ERROR = ErrorParams(np.zeros(2), np.zeros((2, 2)))


@dataclass(frozen=True)
class AffineErrorModel:
    """Per-type error parameters with an optional fallback default."""

    per_type: dict[str, ErrorParams]
    default: ErrorParams | None = None

    def for_tag(self, type_tag: str) -> ErrorParams:
        params = self.per_type.get(type_tag, self.default)
        if params is None:
            raise ConfigurationError(
                f"no error parameters for type {type_tag!r} and no default entry"
            )
        return params

    @staticmethod
    def zero() -> "AffineErrorModel":
        return AffineErrorModel(per_type={}, default=ZERO_ERROR)

    @staticmethod
    def from_dict(doc: dict) -> "AffineErrorModel":
        per_type: dict[str, ErrorParams] = {}
        default: ErrorParams | None = None
        for tag, entry in doc.items():
            params = ErrorParams(
                translation_mean=np.asarray(entry.get("translation_mean", [0.0, 0.0])),
                translation_cov=np.asarray(entry.get("translation_cov", [[0.0, 0.0], [0.0, 0.0]])),
                rotation_sigma=float(entry.get("rotation_sigma", 0.0)),
                scale_sigma=float(entry.get("scale_sigma", 0.0)),
                shear_sigma=float(entry.get("shear_sigma", 0.0)),
            )
            if tag == "default":
                default = params
            else:
                per_type[tag] = params
        return AffineErrorModel(per_type=per_type, default=default)

    @staticmethod
    def load(path: str) -> "AffineErrorModel":
        with open(path, encoding="utf-8") as handle:
            return AffineErrorModel.from_dict(json.load(handle))


@dataclass(frozen=True)
class AffineSample:
    """One drawn affine perturbation: x -> transform @ x + translation."""

    transform: np.ndarray
    translation: np.ndarray


@dataclass(frozen=True)
class FeatureEnsemble:
    """N perturbed copies of one typed feature set.

    Topology is preserved: every sample has the same feature count and
    per-feature vertex counts as the source.
    """

    type_tag: str
    source: TypedFeatureSet
    samples: tuple[TypedFeatureSet, ...]

    @property
    def sample_count(self) -> int:
        return len(self.samples)


def sample_affine(
    model: AffineErrorModel, type_tag: str, rng_stream: np.random.Generator
) -> AffineSample:
    """Draw one affine perturbation for the given feature type.

    Transform = Rotation(theta) @ Scale(s) @ Shear(h) with
    theta ~ N(0, rotation_sigma^2), s ~ N(1, scale_sigma^2) isotropic,
    h ~ N(0, shear_sigma^2); translation ~ N(mean, cov).
    Deterministic given the generator state.
    """
    params = model.for_tag(type_tag)
    theta = params.rotation_sigma * rng_stream.standard_normal()
    scale = 1.0 + params.scale_sigma * rng_stream.standard_normal()
    shear = params.shear_sigma * rng_stream.standard_normal()
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    rotation = np.array([[cos_t, -sin_t], [sin_t, cos_t]])
    transform = rotation @ (scale * np.array([[1.0, shear], [0.0, 1.0]]))
    translation = params.translation_mean + params.cov_sqrt() @ rng_stream.standard_normal(2)
    return AffineSample(transform=transform, translation=translation)


def generate_ensemble(
    source: TypedFeatureSet, model: AffineErrorModel, n: int, seed: int
) -> FeatureEnsemble:
    """Generate N perturbed copies of ``source``.

    One affine sample is drawn per (feature, sample) pair and applied to
    every vertex of that feature, with the 2x2 transform taken about the
    feature centroid so pure rotations/scales keep the center fixed.
    Streams are keyed by (seed, tag, feature index, sample index), so the
    output is independent of iteration order and parallel schedule.
    """
    if n < 1:
        raise ValueError("ensemble size must be >= 1")
    model.for_tag(source.type_tag)  # fail fast on missing configuration
    per_sample_features: list[list[Geometry]] = [[] for _ in range(n)]
    for i, feature in enumerate(source.features):
        centroid = feature.centroid
        for sample_index in range(n):
            draw = sample_affine(
                model,
                source.type_tag,
                rng.stream(seed, "map", source.type_tag, i, sample_index),
            )
            if (draw.transform == _IDENTITY).all() and not draw.translation.any():
                # a no-op draw must not perturb: the centering arithmetic
                # below rounds (v - c) + c away from v by an ulp
                per_sample_features[sample_index].append(feature)
                continue
            vertices = (
                (feature.vertices - centroid) @ draw.transform.T + centroid + draw.translation
            )
            per_sample_features[sample_index].append(Geometry(feature.kind, vertices))
    samples = tuple(
        TypedFeatureSet(source.type_tag, tuple(features), source.line_width)
        for features in per_sample_features
    )
    return FeatureEnsemble(type_tag=source.type_tag, source=source, samples=samples)


@dataclass(frozen=True)
class GaussianParams:
    """Mean/variance pair fitted to a sample collection."""

    mean: float
    variance: float

    def __post_init__(self) -> None:
        if self.variance < 0:
            raise ValueError("variance must be >= 0")


def moment_match(values: "np.ndarray | list[float]") -> GaussianParams:
    """Fit a Gaussian by moment matching: sample mean, unbiased variance.

    A single value gives variance 0 (treated downstream as deterministic).
    """
    array = np.asarray(values, dtype=np.float64)
    if array.size == 0:
        raise ValueError("moment matching needs at least one value")
    mean = float(array.mean())
    variance = float(array.var(ddof=1)) if array.size > 1 else 0.0
    return GaussianParams(mean=mean, variance=variance)


def occupancy_estimate(hits: int, n: int) -> float:
    """Raw occupancy frequency hits/n, no smoothing."""
    if n < 1:
        raise ValueError("sample count must be >= 1")
    if not 0 <= hits <= n:
        raise ValueError(f"hits {hits} outside [0, {n}]")
    return hits / n

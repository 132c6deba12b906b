"""Harmonic featurization of quality-flagged multispectral time series.

Each band's irregular time series is reduced to five coefficients by ordinary
least squares onto the basis [1, cos(2*pi*t), sin(2*pi*t), cos(4*pi*t),
sin(4*pi*t)], with t in fractional years anchored at April 1. A derived
chlorophyll index band (NIR/GREEN - 1) is appended before fitting, so B bands
yield a feature vector of length 5*B.
"""

import datetime
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from cropshift.errors import FeatureBuildError, InsufficientObservations, RankDeficient

N_HARMONIC_COEFFS = 5
MIN_DISTINCT_TIMES = 5
RANK_RTOL = 1e-10
DAYS_PER_YEAR = 365.25

# Default band names used to derive the chlorophyll index.
GCVI_BAND = "GCVI"
NIR_BAND = "NIR"
GREEN_BAND = "GREEN"


@dataclass(frozen=True)
class Observation:
    """One acquisition: fractional-year timestamp, band values, quality verdict."""

    time_years: float
    band_values: dict
    clear: bool

    def __post_init__(self):
        if not np.isfinite(self.time_years):
            raise ValueError("observation time must be finite")


@dataclass(frozen=True)
class PixelTimeSeries:
    pixel_id: str
    region_id: str
    label: Optional[str]
    observations: tuple

    def __post_init__(self):
        object.__setattr__(self, "observations", tuple(self.observations))
        times = [o.time_years for o in self.observations]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError(f"pixel {self.pixel_id!r}: observations not sorted by time")
        if self.observations:
            bands = set(self.observations[0].band_values)
            for o in self.observations[1:]:
                if set(o.band_values) != bands:
                    raise ValueError(
                        f"pixel {self.pixel_id!r}: inconsistent band sets across observations"
                    )

    @property
    def bands(self) -> set:
        return set(self.observations[0].band_values) if self.observations else set()


@dataclass(frozen=True)
class HarmonicCoefficients:
    """Intercept plus cosine/sine pairs at annual frequencies 1 and 2."""

    c: float
    a1: float
    b1: float
    a2: float
    b2: float

    def __post_init__(self):
        if not all(np.isfinite(v) for v in self.as_array()):
            raise ValueError("harmonic coefficients must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.c, self.a1, self.b1, self.a2, self.b2])


@dataclass(frozen=True)
class FeatureVector:
    pixel_id: str
    region_id: str
    label: Optional[str]
    values: np.ndarray


def year_fraction(date: datetime.date, anchor: datetime.date) -> float:
    """Convert a calendar date to fractional years relative to the anchor.

    Uses actual day counts divided by 365.25; the anchor (conventionally
    April 1 of the target year) maps to zero.
    """
    return (date - anchor).days / DAYS_PER_YEAR


def compute_gcvi(nir: float, green: float) -> float:
    """Green chlorophyll vegetation index: NIR / GREEN - 1.

    Raises ZeroDivisionError on zero green reflectance, which signals a
    corrupt record rather than a valid index value.
    """
    if green == 0:
        raise ZeroDivisionError("green reflectance is zero; GCVI undefined")
    return nir / green - 1.0


def filter_clear(series: PixelTimeSeries) -> PixelTimeSeries:
    """Keep only observations flagged clear, preserving order."""
    kept = tuple(o for o in series.observations if o.clear)
    return PixelTimeSeries(series.pixel_id, series.region_id, series.label, kept)


def harmonic_design(times: np.ndarray) -> np.ndarray:
    """Design matrix with columns [1, cos 2pi t, sin 2pi t, cos 4pi t, sin 4pi t]."""
    t = np.asarray(times, dtype=np.float64)
    w = 2.0 * np.pi * t
    return np.column_stack(
        [np.ones_like(t), np.cos(w), np.sin(w), np.cos(2.0 * w), np.sin(2.0 * w)]
    )


def fit_harmonics(samples: Sequence) -> HarmonicCoefficients:
    """Least-squares harmonic coefficients for (time_years, value) pairs.

    Solves via SVD rather than the normal equations; clustered acquisition
    times make the design ill-conditioned long before it becomes singular.
    """
    pairs = list(samples)
    if len(pairs) == 0:
        raise InsufficientObservations("no observations to fit")
    times = np.array([t for t, _ in pairs], dtype=np.float64)
    values = np.array([v for _, v in pairs], dtype=np.float64)
    n_distinct = len(np.unique(times))
    if n_distinct < MIN_DISTINCT_TIMES:
        raise InsufficientObservations(
            f"{n_distinct} distinct time values; need at least {MIN_DISTINCT_TIMES}"
        )
    design = harmonic_design(times)
    coef, _, _, svals = np.linalg.lstsq(design, values, rcond=None)
    if svals[-1] < RANK_RTOL * svals[0]:
        raise RankDeficient(
            f"design matrix numerically singular (sv ratio {svals[-1] / svals[0]:.3e})"
        )
    return HarmonicCoefficients(*(float(v) for v in coef))


def build_features(
    series: PixelTimeSeries,
    band_manifest: Sequence[str],
    gcvi_band: str = GCVI_BAND,
    nir_band: str = NIR_BAND,
    green_band: str = GREEN_BAND,
) -> FeatureVector:
    """Concatenate per-band harmonic coefficients in manifest order.

    The series must already be clear-filtered. If the manifest names the
    derived index band, it is computed from the NIR and green bands of each
    observation. Any per-band failure aborts the whole pixel; the error is
    tagged with pixel id and band name so callers can drop and report it.
    """
    manifest = list(band_manifest)
    if len(manifest) != len(set(manifest)):
        raise ValueError("band manifest contains duplicates")
    values = np.empty(N_HARMONIC_COEFFS * len(manifest), dtype=np.float64)
    times = np.array([o.time_years for o in series.observations], dtype=np.float64)
    for b, band in enumerate(manifest):
        try:
            if band == gcvi_band:
                ys = np.array(
                    [
                        compute_gcvi(o.band_values[nir_band], o.band_values[green_band])
                        for o in series.observations
                    ]
                )
            else:
                ys = np.array([o.band_values[band] for o in series.observations])
        except ZeroDivisionError as exc:
            raise FeatureBuildError(str(exc), pixel_id=series.pixel_id, band=band) from exc
        except KeyError as exc:
            raise FeatureBuildError(
                f"band {exc.args[0]!r} missing from observations",
                pixel_id=series.pixel_id,
                band=band,
            ) from exc
        try:
            coeffs = fit_harmonics(zip(times, ys))
        except FeatureBuildError as exc:
            exc.pixel_id = series.pixel_id
            exc.band = band
            raise
        values[N_HARMONIC_COEFFS * b : N_HARMONIC_COEFFS * (b + 1)] = coeffs.as_array()
    return FeatureVector(series.pixel_id, series.region_id, series.label, values)

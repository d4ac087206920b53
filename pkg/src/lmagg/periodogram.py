"""Smoothed periodogram and the distances used to compare it with model spectra.

Normalization: a unit-variance white noise gives a flat curve at ``1/(2 pi)``.
The model mixtures ``F`` and ``|H|^2`` integrate to ``2 pi`` times the variance,
so compare ``periodogram`` against ``F / (2 pi)``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal.windows import tukey

from .errors import SeriesTooShort
from .spectral import SpectralCurve

MIN_LENGTH = 256
DEFAULT_TAPER = 0.1
DEFAULT_SPAN = 64  # half-width (in Fourier frequencies) of the Daniell window


def daniell(values, span: int):
    """Moving average over ``2 span + 1`` neighbouring frequencies (mirrored at the ends)."""
    if span <= 0:
        return np.asarray(values, dtype=float).copy()
    return uniform_filter1d(np.asarray(values, dtype=float), size=2 * span + 1, mode="mirror")


def raw_periodogram(series, taper: float = DEFAULT_TAPER):
    """``(frequencies in (0, pi], ordinates)`` of the tapered, demeaned series."""
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < MIN_LENGTH:
        raise SeriesTooShort(f"series has {n} samples; at least {MIN_LENGTH} are needed")
    x = x - x.mean()
    h = tukey(n, taper) if taper > 0 else np.ones(n)
    spec = np.fft.rfft(h * x)
    power = np.abs(spec) ** 2 / (2.0 * math.pi * np.sum(h * h))
    freqs = 2.0 * math.pi * np.arange(spec.size) / n
    return freqs[1:], power[1:]


def periodogram(series, *, taper: float = DEFAULT_TAPER, span: int = DEFAULT_SPAN,
                step: float | None = None) -> SpectralCurve:
    """Daniell-smoothed periodogram.

    ``step`` (sampling interval of a continuous-time path) rescales frequencies
    to ``omega / step`` and ordinates by ``step`` so that the curve estimates the
    continuous-time spectrum divided by ``2 pi``.
    """
    freqs, power = raw_periodogram(series, taper)
    smooth = daniell(power, span)
    meta = {"taper": taper, "span": span, "length": int(np.asarray(series).size)}
    if step is not None:
        freqs = freqs / step
        smooth = smooth * step
        meta["step"] = step
    return SpectralCurve(freqs, smooth, "periodogram", None, meta)


def smoothed_l1(estimate: SpectralCurve, reference, band=None, span: int | None = None) -> float:
    """Relative L1 distance ``sum|a - b| / sum|b|`` after smoothing the reference alike.

    ``reference`` holds model values on ``estimate.grid`` (already divided by
    ``2 pi``). Both sides use the estimate's Daniell span unless ``span`` is given.
    """
    ref = np.asarray(reference, dtype=float)
    k = estimate.metadata.get("span", DEFAULT_SPAN) if span is None else span
    ref_s = daniell(ref, k)
    sel = _band(estimate.grid, band)
    a, b = estimate.values[sel], ref_s[sel]
    return float(np.sum(np.abs(a - b)) / np.sum(np.abs(b)))


def shape_l1(estimate: SpectralCurve, reference, band=None, span: int | None = None) -> float:
    """Relative L1 distance after rescaling the smoothed reference to the estimate's band mean.

    Compares shapes only, for runs whose normalization ``B_N`` is a heuristic.
    """
    ref = np.asarray(reference, dtype=float)
    k = estimate.metadata.get("span", DEFAULT_SPAN) if span is None else span
    ref_s = daniell(ref, k)
    sel = _band(estimate.grid, band)
    a, b = estimate.values[sel], ref_s[sel]
    b = b * (a.mean() / b.mean())
    return float(np.sum(np.abs(a - b)) / np.sum(b))


def log_distance(estimate: SpectralCurve, reference, band=None, span: int | None = None) -> float:
    """Mean absolute log ratio between the estimate and the smoothed reference."""
    ref = np.asarray(reference, dtype=float)
    k = estimate.metadata.get("span", DEFAULT_SPAN) if span is None else span
    ref_s = daniell(ref, k)
    sel = _band(estimate.grid, band)
    return float(np.mean(np.abs(np.log(estimate.values[sel] / ref_s[sel]))))


def _band(grid, band):
    if band is None:
        return np.ones(grid.shape, dtype=bool)
    lo, hi = band
    return (grid >= lo) & (grid <= hi)


def peak_frequency(curve: SpectralCurve, band=None) -> float:
    sel = _band(curve.grid, band)
    g = curve.grid[sel]
    return float(g[np.argmax(curve.values[sel])])

"""Figures of merit with one-standard-deviation counting errors.

Every quantity the campaigns report passes through here: signal-to-noise
of the write photon, the write/read cross-correlation, post-selected
two-node correlators, and the CHSH and fidelity combinations built from
them.  Error bars follow photon-counting statistics: Poisson for
singles-based rates, multinomial for correlators, quadrature for
derived sums.

All estimators accept plain numbers as well as CountsTable buckets, and
they work identically on exact expected counts (floats) so the analytic
and Monte Carlo paths share one code path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .detection import CountsTable


class EstimatorError(ValueError):
    """Raised when a requested estimate has no data to stand on."""


@dataclass(frozen=True)
class EstimateWithError:
    """A value with its one-sigma counting uncertainty."""

    value: float
    sigma: float
    n_samples: int = 0

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.value)

    def compatible(self, target: float, target_sigma: float = 0.0,
                   n_sigma: float = 1.0) -> bool:
        """True when |value - target| <= n_sigma combined deviations."""
        combined = math.hypot(self.sigma, target_sigma)
        return abs(self.value - target) <= n_sigma * combined

    def __str__(self) -> str:
        if self.unbounded:
            return "unbounded"
        return f"{self.value:.6g} +/- {self.sigma:.6g}"


#: Distinguished result for a noise-free SNR measurement.
SNR_UNBOUNDED = EstimateWithError(value=math.inf, sigma=math.inf)


def snr(t: CountsTable, key: str | None = None) -> EstimateWithError:
    """Signal-to-noise ratio of the far-detector clicks.

    Signal windows are the source-on trials of the chosen bucket,
    noise windows are the table's source-off windows.  Both are click
    rates, so unequal window counts are handled.
    """
    if key is None:
        if len(t.trials) != 1:
            raise EstimatorError("table has several buckets; pass a key")
        key = next(iter(t.trials))
    n_sig = t.singles_b[key]
    w_sig = t.trials[key]
    if w_sig <= 0 or t.noise_windows <= 0:
        raise EstimatorError("snr needs both signal and noise windows")
    if t.noise_counts == 0:
        return SNR_UNBOUNDED
    value = (n_sig / w_sig) / (t.noise_counts / t.noise_windows)
    if n_sig == 0:
        return EstimateWithError(0.0, (1.0 / w_sig)
                                 / (t.noise_counts / t.noise_windows),
                                 n_samples=int(w_sig))
    sigma = value * math.sqrt(1.0 / n_sig + 1.0 / t.noise_counts)
    return EstimateWithError(value, sigma, n_samples=int(w_sig))


def g2_wr(t: CountsTable, key: str | None = None) -> EstimateWithError:
    """Write/read cross-correlation from singles and coincidences.

    g2 = P(coincidence) / (P(write click) P(read click)), with the
    relative Poisson errors of the three counts added in quadrature.
    """
    if key is None:
        if len(t.trials) != 1:
            raise EstimatorError("table has several buckets; pass a key")
        key = next(iter(t.trials))
    n = t.trials[key]
    n_w = t.singles_b[key]
    n_r = t.singles_a[key]
    n_wr = t.coincidences[key]
    if n_w <= 0 or n_r <= 0:
        raise EstimatorError(f"{key}: zero singles, g2 undefined")
    value = n_wr * n / (n_w * n_r)
    if n_wr == 0:
        return EstimateWithError(0.0, n / (n_w * n_r), n_samples=int(n))
    sigma = value * math.sqrt(1.0 / n_wr + 1.0 / n_w + 1.0 / n_r)
    return EstimateWithError(value, sigma, n_samples=int(n))


def correlator_from_bins(bins: np.ndarray) -> EstimateWithError:
    """Signed correlator from outcome bins ordered [++, +-, -+, --]."""
    bins = np.asarray(bins, dtype=float)
    total = bins.sum()
    if total <= 0:
        raise EstimatorError("empty outcome bins")
    value = (bins[0] + bins[3] - bins[1] - bins[2]) / total
    sigma = math.sqrt(max(1.0 - value * value, 0.0) / total)
    return EstimateWithError(value, sigma, n_samples=int(round(total)))


def correlator(t: CountsTable, setting_key: str) -> EstimateWithError:
    """Post-selected correlator of one setting bucket."""
    if setting_key not in t.outcome_counts:
        raise EstimatorError(f"no counts for setting {setting_key!r}")
    return correlator_from_bins(t.outcome_counts[setting_key])


def chsh(c00: EstimateWithError, c01: EstimateWithError,
         c10: EstimateWithError, c11: EstimateWithError
         ) -> EstimateWithError:
    """CHSH S = |E00 + E01 + E10 - E11| with quadrature errors."""
    value = abs(c00.value + c01.value + c10.value - c11.value)
    sigma = math.sqrt(c00.sigma ** 2 + c01.sigma ** 2
                      + c10.sigma ** 2 + c11.sigma ** 2)
    n = c00.n_samples + c01.n_samples + c10.n_samples + c11.n_samples
    return EstimateWithError(value, sigma, n_samples=n)


def fidelity(xx: EstimateWithError, yy: EstimateWithError,
             zz: EstimateWithError) -> EstimateWithError:
    """Bell-state fidelity (1 + <XX> - <YY> + <ZZ>) / 4."""
    value = (1.0 + xx.value - yy.value + zz.value) / 4.0
    sigma = math.sqrt(xx.sigma ** 2 + yy.sigma ** 2 + zz.sigma ** 2) / 4.0
    n = xx.n_samples + yy.n_samples + zz.n_samples
    return EstimateWithError(value, sigma, n_samples=n)


def g2_with_background(g2_clean: float, x_a: float, x_b: float) -> float:
    """Observed g2 after adding uncorrelated noise to both arms.

    x_a and x_b are the noise-to-signal click ratios of the read and
    write arms.  Useful for sizing background rates against a g2
    target before running the full chain.
    """
    num = g2_clean + x_a + x_b * (1.0 + x_a)
    return num / ((1.0 + x_a) * (1.0 + x_b))

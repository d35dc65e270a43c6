"""Poisson fluorescence readout model for the spin measurement."""

from dataclasses import dataclass, replace
import math

from scipy.stats import poisson

from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class DetectionModel:
    """State-dependent fluorescence readout.

    A shot is classified dark when its photon count is at most ``threshold``.
    ``perfect=True`` short-circuits every error probability to zero.
    """

    dark_mean: float = 11.24
    bright_mean: float = 54.82
    threshold: int = 28
    dark_lifetime: float = 0.4
    readout_duration: float = 200e-6
    perfect: bool = False

    @classmethod
    def ideal(cls):
        return cls(perfect=True)

    def validate(self):
        if self.perfect:
            return self
        vals = (self.dark_mean, self.bright_mean, self.dark_lifetime, self.readout_duration)
        if min(vals) <= 0:
            raise ConfigError("detection model parameters must be positive")
        if not self.dark_mean < self.threshold < self.bright_mean:
            raise ConfigError("need dark_mean < threshold < bright_mean")
        return self

    def with_threshold(self, threshold):
        return replace(self, threshold=threshold)


def detection_error_probs(model):
    """Return ``(P(dark|bright), P(bright|dark), P(lifetime flip))``."""
    if model.perfect:
        return 0.0, 0.0, 0.0
    p_db = float(poisson.cdf(model.threshold, model.bright_mean))
    p_bd = float(poisson.sf(model.threshold, model.dark_mean))
    flip = model.readout_duration / model.dark_lifetime
    return p_db, p_bd, flip


def dark_given_dark(model):
    _, p_bd, flip = detection_error_probs(model)
    return 1.0 - p_bd - flip


def spam_dark_probability(model, prep_error):
    """Probability of preparing and then reading out the dark state as dark."""
    if not 0 <= prep_error <= 1:
        raise DomainError("prep_error must lie in [0, 1]")
    return (1.0 - prep_error) * dark_given_dark(model)


def prep_error_for_spam(model, spam):
    """Invert :func:`spam_dark_probability` for the preparation error."""
    return 1.0 - spam / dark_given_dark(model)


def mixture_ratio(p_sel, p_other, model):
    """Ratio of wanted to unwanted weight in a dark-heralded mixture.

    ``p_sel`` is the pre-measurement weight correlated with the dark state,
    ``p_other`` the weight that can be misread as dark.
    """
    p_db = detection_error_probs(model)[0]
    if p_db == 0 or p_other == 0:
        return math.inf
    return p_sel / (p_db * p_other)

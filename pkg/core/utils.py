import numpy as np
from scipy import stats


def mean_and_se(samples):
    """
    Sample mean and its standard error (sample standard deviation over the
    square root of the sample size).
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size < 2:
        return float(samples.mean()) if samples.size else 0.0, 0.0
    return float(samples.mean()), float(samples.std(ddof=1) / np.sqrt(samples.size))


def loglog_slope(x, y):
    """
    Least-squares slope of log(y) against log(x), with its standard error.
    Nonpositive values are skipped; fewer than two usable points give nan.
    """
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    usable = (x > 0) & (y > 0)
    if usable.sum() < 2:
        return float('nan'), float('nan')
    fit = stats.linregress(np.log(x[usable]), np.log(y[usable]))
    return float(fit.slope), float(fit.stderr)

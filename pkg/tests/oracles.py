"""Reference implementations shared by several test modules."""
import numpy as np


def naive_sigma2(s, N, m_max):
    """Raw series for the finite-N COE number variance, cut at m_max.

    The dropped terms average sin^2 to 1/2 with K2 saturated at 1 + 1/N, so
    they are added back as (1 + 1/N) / (2 m_max).
    """
    m = np.arange(1, m_max + 1, dtype=float)
    tau = m / N
    with np.errstate(divide="ignore"):
        k2 = np.where(tau < 1, 2 * tau - tau * np.log(1 + 2 * tau),
                      2 - tau * np.log((2 * tau + 1) / np.abs(2 * tau - 1)))
    k2 *= 1 + 1 / N
    out = []
    for x in np.atleast_1d(s):
        series = np.sum(np.sin(m * np.pi * x / N) ** 2 * k2 / m**2)
        out.append(2 * N / np.pi**2 * (series + (1 + 1 / N) / (2 * m_max)))
    return np.array(out)

"""Quadrature and differentiation on sampled data.

Everything here works on samples along axis 0 and accepts trailing vector
dimensions, so the same routines handle scalar profiles and (N, 3) fields.
"""

import numpy as np


def simpson_weights(panels):
    """Simpson weights for ``panels`` double-intervals on [0, 1]."""
    n = 2 * panels
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / (3.0 * n)


def interval_simpson(func, breaks, panels=2):
    """Integrate ``func`` over every interval ``[breaks[i], breaks[i+1]]``.

    Each interval gets its own composite Simpson rule with ``panels``
    double-intervals; ``func`` is evaluated once on all nodes at once.
    """
    breaks = np.asarray(breaks, dtype=float)
    a = breaks[:-1, None]
    width = np.diff(breaks)[:, None]
    frac = np.linspace(0.0, 1.0, 2 * panels + 1)[None, :]
    nodes = a + width * frac
    values = np.asarray(func(nodes.ravel()), dtype=float)
    values = values.reshape(nodes.shape + values.shape[1:])
    w = simpson_weights(panels)
    pieces = np.tensordot(w, np.moveaxis(values, 1, 0), axes=(0, 0))
    return pieces * width.reshape(width.shape[:1] + (1,) * (pieces.ndim - 1))


def cumulative_simpson(func, breaks, panels=2, constant=0.0):
    """Running integral ``constant + int_{breaks[0]}^{breaks[i]} func``.

    Returns an array with one entry per breakpoint; the first entry is
    ``constant`` exactly.
    """
    pieces = interval_simpson(func, breaks, panels)
    out = np.empty((pieces.shape[0] + 1,) + pieces.shape[1:])
    out[0] = constant
    out[1:] = constant + np.cumsum(pieces, axis=0)
    return out


def _fd_stencil(values, h, order, accuracy):
    f = values
    roll = lambda k: np.roll(f, -k, axis=0)
    if accuracy == 2:
        if order == 1:
            return (roll(1) - roll(-1)) / (2.0 * h)
        return (roll(1) - 2.0 * f + roll(-1)) / h**2
    if order == 1:
        return (-roll(2) + 8.0 * roll(1) - 8.0 * roll(-1) + roll(-2)) / (12.0 * h)
    return (-roll(2) + 16.0 * roll(1) - 30.0 * f + 16.0 * roll(-1) - roll(-2)) / (12.0 * h**2)


def periodic_derivative(values, period, order=1, method="spectral"):
    """Derivative of periodic samples taken on a uniform grid over ``period``.

    ``method`` is ``"spectral"`` (Fourier), ``"fd4"`` or ``"fd2"`` (central
    differences of that accuracy order, repeated for higher derivatives).
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    if order == 0:
        return values.copy()
    if method == "spectral":
        coef = np.fft.rfft(values, axis=0)
        omega = 2.0 * np.pi * np.fft.rfftfreq(n, d=1.0 / n) / period
        factor = (1j * omega) ** order
        if n % 2 == 0:
            factor[-1] = 0.0
        factor = factor.reshape((-1,) + (1,) * (values.ndim - 1))
        return np.fft.irfft(coef * factor, n=n, axis=0)
    if method not in ("fd2", "fd4"):
        raise ValueError(f"unknown differentiation method {method!r}")
    accuracy = int(method[2])
    h = period / n
    out = values
    remaining = order
    while remaining >= 2:
        out = _fd_stencil(out, h, 2, accuracy)
        remaining -= 2
    if remaining:
        out = _fd_stencil(out, h, 1, accuracy)
    return out


def periodic_trapezoid(values, period):
    """Trapezoid rule for a periodic integrand; spectrally accurate."""
    values = np.asarray(values, dtype=float)
    return np.sum(values, axis=0) * (period / values.shape[0])


def periodic_cumulative(values, period):
    """Running integral of periodic samples, zero at the first sample.

    The mean part is integrated exactly and the oscillating part through its
    Fourier series, so the result is spectrally accurate at every sample.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    coef = np.fft.rfft(values, axis=0)
    omega = 2.0 * np.pi * np.fft.rfftfreq(n, d=1.0 / n) / period
    mean = coef[0].real / n
    inv = np.zeros_like(omega, dtype=complex)
    inv[1:] = 1.0 / (1j * omega[1:])
    if n % 2 == 0:
        inv[-1] = 0.0
    inv = inv.reshape((-1,) + (1,) * (values.ndim - 1))
    osc = np.fft.irfft(coef * inv, n=n, axis=0)
    s = np.arange(n) * (period / n)
    return mean * s.reshape((-1,) + (1,) * (values.ndim - 1)) + osc - osc[0]


def integrate_with_drift(values, drift, period):
    """Integrate samples over one period when they carry a linear drift.

    ``values - (s / period) * drift`` must be periodic, with ``drift``
    periodic too.  This is the shape of any linear differential expression
    of a field whose endpoints differ by a constant vector.
    """
    values = np.asarray(values, dtype=float)
    drift = np.asarray(drift, dtype=float)
    n = values.shape[0]
    s = np.arange(n) * (period / n)
    periodic = values - (s / period) * drift
    coef = np.fft.rfft(drift) / n
    omega = 2.0 * np.pi * np.arange(1, coef.shape[0]) / period
    # int_0^P s exp(i w s) ds = P / (i w) for w != 0.
    moments = period / (1j * omega)
    osc = coef[1:] * moments
    if n % 2 == 0:
        osc[-1] = 0.0
    s_moment = coef[0].real * period**2 / 2.0 + 2.0 * np.sum(osc.real)
    return periodic_trapezoid(periodic, period) + s_moment / period


def log_slopes(steps, errors):
    """Successive log-log slopes of ``errors`` against ``steps``."""
    steps = np.asarray(steps, dtype=float)
    errors = np.asarray(errors, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.diff(np.log(errors)) / np.diff(np.log(steps))

"""Spectral helpers on the uniform periodic grid theta_j = 2*pi*j/n.

All routines assume the sample axis covers one full period without the
endpoint.  Real fields go through rfft; complex fields through fft.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "grid",
    "deriv",
    "hilbert",
    "invert_dtheta_minus_hilbert",
    "log2sin_convolution",
    "trig_resample",
    "dealiased_product",
    "mode_coefficients",
    "mode_max_abs",
    "sine_coefficients",
    "cosine_coefficients",
    "mean_theta",
]


def grid(n: int) -> np.ndarray:
    """Uniform periodic nodes 2*pi*j/n, j = 0..n-1."""
    return 2.0 * np.pi * np.arange(n) / n


def _rfft_wavenumbers(n: int) -> np.ndarray:
    return np.arange(n // 2 + 1)


def _apply_rfft_multiplier(f: np.ndarray, mult: np.ndarray, axis: int) -> np.ndarray:
    """Apply a conjugate-symmetric Fourier multiplier to a real field."""
    f = np.asarray(f, dtype=float)
    n = f.shape[axis]
    spec = np.fft.rfft(f, axis=axis)
    shape = [1] * f.ndim
    shape[axis] = n // 2 + 1
    spec *= mult.reshape(shape)
    return np.fft.irfft(spec, n=n, axis=axis)


def deriv(f: np.ndarray, order: int = 1, axis: int = -1) -> np.ndarray:
    """Spectral derivative d^order/dtheta^order of a real periodic field."""
    n = np.asarray(f).shape[axis]
    k = _rfft_wavenumbers(n).astype(float)
    mult = (1j * k) ** order
    if order % 2 == 1 and n % 2 == 0:
        # The Nyquist cosine has no representable odd derivative on the grid.
        mult[-1] = 0.0
    return _apply_rfft_multiplier(f, mult, axis)


def hilbert(f: np.ndarray, axis: int = -1) -> np.ndarray:
    """Periodic Hilbert transform, multiplier i*sign(k); mean maps to zero."""
    n = np.asarray(f).shape[axis]
    k = _rfft_wavenumbers(n)
    mult = np.where(k > 0, 1j, 0.0).astype(complex)
    if n % 2 == 0:
        mult[-1] = 0.0
    return _apply_rfft_multiplier(f, mult, axis)


def invert_dtheta_minus_hilbert(f: np.ndarray, axis: int = -1) -> np.ndarray:
    """Solve (d/dtheta - H) u = f for the part of f supported on |k| >= 2.

    Modes 0 and +-1 lie in the kernel of the operator and are dropped; the
    caller is responsible for checking that f carries no content there.
    """
    n = np.asarray(f).shape[axis]
    k = _rfft_wavenumbers(n).astype(float)
    mult = np.zeros(n // 2 + 1, dtype=complex)
    sel = k >= 2
    mult[sel] = 1.0 / (1j * (k[sel] - 1.0))
    return _apply_rfft_multiplier(f, mult, axis)


def log2sin_convolution(f: np.ndarray, axis: int = -1) -> np.ndarray:
    """Exact spectral weights for the kernel log|2 sin((theta-eta)/2)|.

    Returns (1/2pi) * int_0^{2pi} log|2 sin((theta-eta)/2)| f(eta) deta,
    i.e. the multiplier -1/(2|k|) on modes k != 0.
    """
    n = np.asarray(f).shape[axis]
    k = _rfft_wavenumbers(n).astype(float)
    mult = np.zeros(n // 2 + 1)
    mult[1:] = -0.5 / k[1:]
    return _apply_rfft_multiplier(f, mult, axis)


def trig_resample(f: np.ndarray, m: int, axis: int = -1) -> np.ndarray:
    """Exact trigonometric interpolation onto m uniform nodes (m >= n)."""
    f = np.asarray(f)
    n = f.shape[axis]
    if m == n:
        return f.copy()
    if m < n:
        raise ValueError("trig_resample only upsamples")
    spec = np.fft.fft(f, axis=axis)
    spec = np.moveaxis(spec, axis, -1)
    out = np.zeros(spec.shape[:-1] + (m,), dtype=complex)
    h = n // 2
    out[..., :h] = spec[..., :h]
    out[..., m - (n - h):] = spec[..., h:]
    if n % 2 == 0:
        # Split the Nyquist mode symmetrically between +h and -h.
        out[..., h] = 0.5 * spec[..., h]
        out[..., m - h] += 0.5 * spec[..., h]
    out *= m / n
    res = np.fft.ifft(out, axis=-1)
    res = np.moveaxis(res, -1, axis)
    if np.isrealobj(f):
        return res.real
    return res


def dealiased_product(a: np.ndarray, b: np.ndarray, axis: int = -1) -> np.ndarray:
    """Pointwise product with 3/2-rule zero padding along one axis."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = a.shape[axis]
    m = 3 * n // 2
    if m % 2 == 1:
        m += 1
    pa = trig_resample(a, m, axis)
    pb = trig_resample(b, m, axis)
    prod = pa * pb
    # Truncate the spectrum back to n modes.
    spec = np.fft.rfft(prod, axis=axis)
    spec = np.moveaxis(spec, axis, -1)[..., : n // 2 + 1] * (n / m)
    spec = np.moveaxis(spec, -1, axis)
    return np.fft.irfft(spec, n=n, axis=axis)


def mode_coefficients(f: np.ndarray, axis: int = -1) -> np.ndarray:
    """Complex coefficients c_k (fft ordering) with f = sum_k c_k e^{ik theta}."""
    f = np.asarray(f)
    return np.fft.fft(f, axis=axis) / f.shape[axis]


def mode_max_abs(f: np.ndarray, modes: tuple[int, ...], axis: int = -1) -> float:
    """Largest |c_k| over the requested wavenumbers and all other axes."""
    c = np.moveaxis(mode_coefficients(f, axis), axis, -1)
    n = c.shape[-1]
    return max(float(np.max(np.abs(c[..., k % n]))) for k in modes)


def sine_coefficients(f: np.ndarray) -> np.ndarray:
    """Coefficients alpha_n, n = 0..n//2, of f = sum alpha_n sin(n theta)."""
    f = np.asarray(f, dtype=float)
    n = f.shape[-1]
    spec = np.fft.rfft(f) / n
    out = -2.0 * spec.imag
    out[0] = 0.0
    return out


def cosine_coefficients(f: np.ndarray) -> np.ndarray:
    """Coefficients beta_n, n = 0..n//2, of f = beta_0 + sum beta_n cos(n theta)."""
    f = np.asarray(f, dtype=float)
    n = f.shape[-1]
    spec = np.fft.rfft(f) / n
    out = 2.0 * spec.real
    out[0] = spec[0].real
    if n % 2 == 0:
        out[-1] = spec[-1].real
    return out


def mean_theta(f: np.ndarray, axis: int = -1) -> np.ndarray:
    """Periodic-trapezoid mean over the sample axis (= integral over T)."""
    return np.mean(np.asarray(f), axis=axis)

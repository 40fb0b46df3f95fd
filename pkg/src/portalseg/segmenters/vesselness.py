"""Classical multiscale Hessian tubularity filter (binary baseline).

Responds to dark tubular lumens on a brighter background; it cannot name
branches, so its output is a single vessel-probability map in [0, 1].
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter

_BETA = 0.5  # blobness sensitivity


def _hessian_eigenvalues(image: np.ndarray, sigma_px: float):
    """Scale-normalized Hessian eigenvalues, |l1| <= |l2|."""
    hxx = gaussian_filter(image, sigma_px, order=(0, 2), mode="nearest")
    hyy = gaussian_filter(image, sigma_px, order=(2, 0), mode="nearest")
    hxy = gaussian_filter(image, sigma_px, order=(1, 1), mode="nearest")
    norm = sigma_px**2
    hxx, hyy, hxy = hxx * norm, hyy * norm, hxy * norm
    tmp = np.sqrt((hxx - hyy) ** 2 + 4.0 * hxy**2)
    mu1 = 0.5 * (hxx + hyy + tmp)
    mu2 = 0.5 * (hxx + hyy - tmp)
    swap = np.abs(mu1) > np.abs(mu2)
    l1 = np.where(swap, mu2, mu1)
    l2 = np.where(swap, mu1, mu2)
    return l1, l2


def vesselness(image: np.ndarray, scales_mm, spacing_mm: float = 0.5) -> np.ndarray:
    """Max-over-scales tubularity response in [0, 1].

    Dark tubes give l2 > 0 (intensity minimum across the tube), so only
    the positive-l2 response is kept.
    """
    image = np.asarray(image, dtype=np.float64)
    if np.any(image < 0) or np.any(image > 1):
        raise ValueError("image intensities must be in [0, 1]")
    out = np.zeros_like(image)
    for scale in scales_mm:
        sigma = max(scale / spacing_mm, 0.5)
        l1, l2 = _hessian_eigenvalues(image, sigma)
        s2 = l1 * l1 + l2 * l2
        s2max = s2.max()
        if s2max <= 0:
            continue
        c2 = 0.25 * s2max  # c = half the max Frobenius norm at this scale
        with np.errstate(divide="ignore", invalid="ignore"):
            rb2 = np.where(l2 != 0, (l1 / l2) ** 2, 0.0)
        resp = np.exp(-rb2 / (2.0 * _BETA**2)) * (1.0 - np.exp(-s2 / (2.0 * c2)))
        resp[l2 <= 0] = 0.0
        out = np.maximum(out, resp)
    return np.clip(out, 0.0, 1.0)

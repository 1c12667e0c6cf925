"""Evaluation functionals: relative error/success, allelic error rate, NMAE, PSNR, SSIM."""

import math

import numpy as np

from .errors import ValidationError

SUCCESS_THRESHOLD = 1e-2


def relative_error(x_true, x_hat):
    """Frobenius-norm relative error ||X - Xhat||_F / ||X||_F."""
    x_true = np.asarray(x_true, dtype=float)
    x_hat = np.asarray(x_hat, dtype=float)
    if x_true.shape != x_hat.shape:
        raise ValidationError(f"shape mismatch {x_true.shape} vs {x_hat.shape}")
    denom = np.linalg.norm(x_true)
    if denom == 0:
        raise ValidationError("relative_error undefined for zero-norm truth")
    return float(np.linalg.norm(x_true - x_hat) / denom)


def success(x_true, x_hat):
    """Recovery success: relative error below 1e-2."""
    return relative_error(x_true, x_hat) < SUCCESS_THRESHOLD


def round_half_away(x):
    """Round to nearest integer, halves away from zero (genotype rounding)."""
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def allelic_error_rate(x_true, x_hat, eval_mask):
    """Fraction of evaluated entries where rounding the estimate misses the truth.

    nnz(|X - round(Xhat)|) over the eval set, divided by its size T.
    """
    eval_mask = np.asarray(eval_mask, dtype=bool)
    t = int(eval_mask.sum())
    if t == 0:
        raise ValidationError("allelic_error_rate needs a non-empty eval set")
    diff = np.asarray(x_true, dtype=float)[eval_mask] - round_half_away(
        np.asarray(x_hat, dtype=float)[eval_mask]
    )
    return float(np.count_nonzero(diff)) / t


def nmae(x_true, x_hat, eval_mask, r_min, r_max):
    """Mean absolute error over the eval set, normalized by the rating range."""
    if not r_max > r_min:
        raise ValidationError(f"need r_max > r_min, got [{r_min}, {r_max}]")
    eval_mask = np.asarray(eval_mask, dtype=bool)
    t = int(eval_mask.sum())
    if t == 0:
        raise ValidationError("nmae needs a non-empty eval set")
    err = np.abs(np.asarray(x_true, dtype=float) - np.asarray(x_hat, dtype=float))[eval_mask]
    return float(err.sum() / ((r_max - r_min) * t))


def psnr(x_true, x_hat, peak=255.0):
    """10*log10(peak^2 / MSE); +inf when the images coincide exactly."""
    x_true = np.asarray(x_true, dtype=float)
    x_hat = np.asarray(x_hat, dtype=float)
    if x_true.shape != x_hat.shape:
        raise ValidationError(f"shape mismatch {x_true.shape} vs {x_hat.shape}")
    mse = float(np.mean((x_true - x_hat) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def ssim(x_true, x_hat, peak=255.0):
    """Mean local SSIM over 8x8 uniform windows with stride 1.

    Window moments are population moments; constants are the standard
    C1 = (0.01*peak)^2, C2 = (0.03*peak)^2.  Images smaller than the window
    are treated as a single window.
    """
    x = np.asarray(x_true, dtype=float)
    y = np.asarray(x_hat, dtype=float)
    if x.shape != y.shape:
        raise ValidationError(f"shape mismatch {x.shape} vs {y.shape}")
    win = 8
    if min(x.shape) < win:
        win = min(x.shape)
    c1 = (0.01 * peak) ** 2
    c2 = (0.03 * peak) ** 2
    xw = np.lib.stride_tricks.sliding_window_view(x, (win, win))
    yw = np.lib.stride_tricks.sliding_window_view(y, (win, win))
    mx = xw.mean(axis=(-2, -1))
    my = yw.mean(axis=(-2, -1))
    vx = (xw**2).mean(axis=(-2, -1)) - mx**2
    vy = (yw**2).mean(axis=(-2, -1)) - my**2
    cov = (xw * yw).mean(axis=(-2, -1)) - mx * my
    num = (2 * mx * my + c1) * (2 * cov + c2)
    den = (mx**2 + my**2 + c1) * (vx + vy + c2)
    return float(np.mean(num / den))

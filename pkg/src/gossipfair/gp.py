"""Gaussian-process surrogate over the allocation space.

Matern kernel, exact posterior mean/variance from a Cholesky factor of
the kernel matrix (plus observation noise and, when needed, an escalating
diagonal jitter), and O(M^2) incremental factor updates when observations
arrive one at a time. No hyperparameter fitting: parameters are fixed at
construction.

Rewards can optionally be centered by their running mean before
regression (the zero-mean prior then models residuals); prediction adds
the mean back. Centering defaults to off, matching the bare regression
equations.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

_NUS = (0.5, 1.5, 2.5)
_SQRT3 = math.sqrt(3.0)
_SQRT5 = math.sqrt(5.0)


@dataclass(frozen=True)
class KernelParams:
    """Matern kernel hyperparameters plus observation noise variance."""

    variance: float
    length_scale: float | tuple[float, ...]
    nu: float = 2.5
    noise: float = 0.0

    def __post_init__(self):
        if self.variance <= 0:
            raise ValueError(f"need variance > 0, got {self.variance}")
        ls = np.atleast_1d(np.asarray(self.length_scale, dtype=float))
        if np.any(ls <= 0):
            raise ValueError(f"need length_scale > 0, got {self.length_scale}")
        if self.nu not in _NUS:
            raise ValueError(f"nu must be one of {_NUS}, got {self.nu}")
        if self.noise < 0:
            raise ValueError(f"need noise >= 0, got {self.noise}")

    def scale_vector(self, dim: int) -> np.ndarray:
        ls = np.atleast_1d(np.asarray(self.length_scale, dtype=float))
        if ls.size == 1:
            return np.full(dim, float(ls[0]))
        if ls.size != dim:
            raise ValueError(
                f"length_scale has {ls.size} entries for dimension {dim}"
            )
        return ls.astype(float)


def default_kernel_params(budget: float, variance: float = 1.0) -> KernelParams:
    """Defaults tied to the search box: length scale 0.2*budget, small noise."""
    return KernelParams(
        variance=variance,
        length_scale=0.2 * budget,
        nu=2.5,
        noise=1e-4 * variance,
    )


def _matern(params: KernelParams, r: np.ndarray) -> np.ndarray:
    v = params.variance
    if params.nu == 0.5:
        return v * np.exp(-r)
    if params.nu == 1.5:
        s = _SQRT3 * r
        return v * (1.0 + s) * np.exp(-s)
    s = _SQRT5 * r
    return v * (1.0 + s + s * s / 3.0) * np.exp(-s)


def _cross(params: KernelParams, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Kernel matrix between row sets x (M,d) and y (Q,d)."""
    scale = params.scale_vector(x.shape[1])
    xs = x / scale
    ys = y / scale
    d2 = (
        np.sum(xs * xs, axis=1)[:, None]
        + np.sum(ys * ys, axis=1)[None, :]
        - 2.0 * (xs @ ys.T)
    )
    return _matern(params, np.sqrt(np.maximum(d2, 0.0)))


def kernel(params: KernelParams, x, y) -> float:
    """Matern covariance between two points."""
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    ya = np.atleast_1d(np.asarray(y, dtype=float))
    if xa.shape != ya.shape:
        raise ValueError(f"dimension mismatch: {xa.shape} vs {ya.shape}")
    scale = params.scale_vector(xa.size)
    r = float(np.linalg.norm((xa - ya) / scale))
    return float(_matern(params, np.array(r)))


_JITTER_START = 1e-8
_JITTER_CAP = 1e-2


class SurrogateState:
    """Immutable GP regression state; update() returns a new state.

    Holds the observed points, rewards, and the lower Cholesky factor of
    K + noise*I (+ jitter*I once escalation was needed).
    """

    __slots__ = ("params", "points", "rewards", "center", "chol", "jitter",
                 "_alpha", "_offset")

    def __init__(self, params: KernelParams, points: np.ndarray,
                 rewards: np.ndarray, center: bool, chol: np.ndarray,
                 jitter: float):
        self.params = params
        self.points = points
        self.rewards = rewards
        self.center = center
        self.chol = chol
        self.jitter = jitter
        self._offset = float(rewards.mean()) if (center and rewards.size) else 0.0
        if rewards.size:
            resid = rewards - self._offset
            w = solve_triangular(chol, resid, lower=True, check_finite=False)
            self._alpha = solve_triangular(chol.T, w, lower=False, check_finite=False)
        else:
            self._alpha = np.zeros(0)

    @classmethod
    def empty(cls, params: KernelParams, dim: int,
              center: bool = False) -> "SurrogateState":
        return cls(params, np.zeros((0, dim)), np.zeros(0), center,
                   np.zeros((0, 0)), 0.0)

    def __len__(self) -> int:
        return self.rewards.size

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def to_json_obj(self) -> dict:
        ls = self.params.length_scale
        return {
            "params": {
                "variance": self.params.variance,
                "length_scale": list(ls) if isinstance(ls, tuple) else ls,
                "nu": self.params.nu,
                "noise": self.params.noise,
            },
            "center": self.center,
            "dim": self.dim,
            "points": self.points.tolist(),
            "rewards": self.rewards.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj())

    @classmethod
    def from_json_obj(cls, obj: dict) -> "SurrogateState":
        p = obj["params"]
        ls = p["length_scale"]
        params = KernelParams(
            variance=p["variance"],
            length_scale=tuple(ls) if isinstance(ls, list) else ls,
            nu=p["nu"],
            noise=p["noise"],
        )
        state = cls.empty(params, int(obj["dim"]), center=bool(obj["center"]))
        for x, f in zip(obj["points"], obj["rewards"]):
            state = update(state, np.asarray(x, dtype=float), float(f))
        return state


def _factor(params: KernelParams, points: np.ndarray,
            jitter: float) -> np.ndarray | None:
    k = _cross(params, points, points)
    k[np.diag_indices_from(k)] += params.noise + jitter
    try:
        return np.linalg.cholesky(k)
    except np.linalg.LinAlgError:
        return None


def _factor_with_escalation(params: KernelParams,
                            points: np.ndarray) -> tuple[np.ndarray, float]:
    jitter = 0.0
    while True:
        chol = _factor(params, points, jitter)
        if chol is not None:
            return chol, jitter
        jitter = _JITTER_START * params.variance if jitter == 0.0 else jitter * 10.0
        if jitter > _JITTER_CAP * params.variance:
            raise np.linalg.LinAlgError(
                "kernel matrix singular even at maximum jitter"
            )


def update(state: SurrogateState, x, f: float) -> SurrogateState:
    """Append one observation, extending the Cholesky factor by one row."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if state.points.size and x.size != state.dim:
        raise ValueError(f"point dimension {x.size} != state dimension {state.dim}")
    points = np.vstack([state.points, x]) if len(state) else x[None, :]
    rewards = np.append(state.rewards, float(f))
    m = len(state)
    diag = state.params.variance + state.params.noise + state.jitter
    if m == 0:
        chol = np.array([[math.sqrt(diag)]])
        return SurrogateState(state.params, points, rewards, state.center,
                              chol, state.jitter)
    c = _cross(state.params, state.points, x[None, :])[:, 0]
    w = solve_triangular(state.chol, c, lower=True, check_finite=False)
    d2 = diag - float(w @ w)
    if d2 > 1e-12 * state.params.variance:
        chol = np.zeros((m + 1, m + 1))
        chol[:m, :m] = state.chol
        chol[m, :m] = w
        chol[m, m] = math.sqrt(d2)
        return SurrogateState(state.params, points, rewards, state.center,
                              chol, state.jitter)
    # border update went singular: refactor from scratch, escalating jitter
    chol, jitter = _factor_with_escalation(state.params, points)
    return SurrogateState(state.params, points, rewards, state.center,
                          chol, jitter)


def posterior(state: SurrogateState, x) -> tuple:
    """Posterior mean and variance at query point(s).

    Accepts a single point (d,) returning floats, or a batch (Q, d)
    returning arrays. With no observations, returns the prior
    (offset 0, prior variance).
    """
    xa = np.asarray(x, dtype=float)
    single = xa.ndim == 1
    pts = xa[None, :] if single else xa
    v = state.params.variance
    if len(state) == 0:
        mean = np.zeros(len(pts))
        var = np.full(len(pts), v)
    else:
        kstar = _cross(state.params, state.points, pts)
        mean = state._offset + kstar.T @ state._alpha
        w = solve_triangular(state.chol, kstar, lower=True, check_finite=False)
        var = np.maximum(v - np.sum(w * w, axis=0), 0.0)
    if single:
        return float(mean[0]), float(var[0])
    return mean, var

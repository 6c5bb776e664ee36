"""Central finite-difference gradient checks (run in float64)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ssrgan.core.tensor import Tensor, zero_grads

STEP = 1e-5
_recorder: list | None = None


class KinkCrossing(ArithmeticError):
    """A finite-difference probe changed the sign pattern of an activation."""


def record_kink(positive: np.ndarray) -> None:
    """Called by piecewise-linear activations with their active-side mask."""
    if _recorder is not None:
        _recorder.append(np.packbits(positive).tobytes())


def _evaluate(loss_fn) -> tuple[float, tuple]:
    """Loss value plus the activation sign pattern seen while computing it."""
    global _recorder
    prev, _recorder = _recorder, []
    try:
        val = loss_fn().item()
        return val, tuple(_recorder)
    finally:
        _recorder = prev


def _central(loss_fn, apply, undo, step, what):
    apply(+1)
    fp, sp = _evaluate(loss_fn)
    apply(-1)
    fm, sm = _evaluate(loss_fn)
    undo()
    if sp != sm:
        raise KinkCrossing(f"probe of {what} straddles an activation kink")
    return (fp - fm) / (2 * step)


@dataclass
class GradCheckResult:
    name: str
    analytic: np.ndarray
    numeric: np.ndarray

    @property
    def rel_error(self) -> float:
        return relative_error(self.analytic, self.numeric)

    @property
    def n_checked(self) -> int:
        return self.analytic.size


def combined_error(results: Sequence[GradCheckResult]) -> float:
    """Relative error of the concatenated gradient over all checked tensors.

    Tensors whose true gradient vanishes (a bias feeding batch norm, say)
    are then judged against the overall gradient scale instead of their own
    finite-difference noise.
    """
    return relative_error(np.concatenate([r.analytic.ravel() for r in results]),
                          np.concatenate([r.numeric.ravel() for r in results]))


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """``||a - n|| / max(||a||, ||n||)``; 0 when both vanish."""
    a = np.asarray(analytic, dtype=np.float64).ravel()
    n = np.asarray(numeric, dtype=np.float64).ravel()
    denom = max(np.linalg.norm(a), np.linalg.norm(n))
    if denom == 0.0:
        return 0.0
    return float(np.linalg.norm(a - n) / denom)


def _analytic(loss_fn, params):
    zero_grads(params)
    loss = loss_fn()
    loss.backward()
    return [p.grad.copy() for p in params]


def check_elementwise(loss_fn: Callable[[], Tensor], params: Sequence[Tensor],
                      step: float = STEP, max_coords: int | None = None,
                      rng: np.random.Generator | None = None) -> list[GradCheckResult]:
    """Compare analytic gradients to central differences coordinate by coordinate.

    ``loss_fn`` must rebuild the graph from the current parameter values on
    each call. With ``max_coords`` set, a random subset of coordinates of each
    parameter is probed instead of all of them.

    Raises :class:`KinkCrossing` when a probe flips the sign pattern of a
    ReLU-family activation: the function is not differentiable across the
    probe interval and the test point should be redrawn.
    """
    grads = _analytic(loss_fn, params)
    results = []
    for p, g in zip(params, grads):
        flat = p.data.reshape(-1)
        idx = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            idx = np.sort((rng or np.random.default_rng(0)).choice(flat.size, max_coords, replace=False))
        num = np.empty(idx.size)
        for k, i in enumerate(idx):
            orig = flat[i]

            def apply(sign, i=i, orig=orig):
                flat[i] = orig + sign * step

            def undo(i=i, orig=orig):
                flat[i] = orig

            num[k] = _central(loss_fn, apply, undo, step, p.name)
        results.append(GradCheckResult(p.name or "param", g.reshape(-1)[idx].astype(np.float64), num))
    return results


def check_directional(loss_fn: Callable[[], Tensor], params: Sequence[Tensor],
                      rng: np.random.Generator, step: float = STEP) -> list[GradCheckResult]:
    """One random-direction probe per parameter tensor.

    Compares ``<grad, u>`` with ``(f(p + h u) - f(p - h u)) / 2h`` for a unit
    direction ``u``, which exercises every coordinate of the tensor at the
    cost of two forward passes. Raises :class:`KinkCrossing` like
    :func:`check_elementwise`.
    """
    grads = _analytic(loss_fn, params)
    results = []
    for p, g in zip(params, grads):
        orig = p.data.copy()
        u = rng.standard_normal(p.shape)
        u /= np.linalg.norm(u)

        def apply(sign):
            p.data[...] = orig + sign * step * u

        def undo():
            p.data[...] = orig

        num = _central(loss_fn, apply, undo, step, p.name)
        results.append(GradCheckResult(p.name or "param", np.array([float(np.sum(g * u))]), np.array([num])))
    return results

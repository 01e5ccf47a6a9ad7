"""Analytic-vs-numeric gradient verification.

Central differences with step 1e-5 against the recorded-graph gradients,
reported as max relative error |a - n| / max(|a|, |n|, 1e-8) per parameter.
Run in 64-bit mode on small configurations; every element is swept unless a
sample cap is given.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .tensor import Parameter, backward


@dataclass
class GradCheckReport:
    errors: dict[str, float]

    @property
    def max_error(self) -> float:
        return max(self.errors.values()) if self.errors else 0.0

    @property
    def worst_parameter(self) -> str:
        if not self.errors:
            return ""
        return max(self.errors, key=self.errors.get)

    def passed(self, tolerance: float) -> bool:
        return self.max_error < tolerance

    def summary_lines(self) -> list[str]:
        lines = [f"{name}: {err:.3e}" for name, err in sorted(self.errors.items())]
        lines.append(f"max relative error: {self.max_error:.3e} ({self.worst_parameter})")
        return lines


def gradient_check(loss_fn: Callable[[], "Tensor"], params: list[Parameter],
                   epsilon: float = 1e-5, max_elements_per_param: int | None = None,
                   seed: int = 0) -> GradCheckReport:
    """Compare analytic gradients of loss_fn against central differences.

    loss_fn must rebuild the computation from the parameters' current values
    on every call. Parameters should be float64 for a meaningful comparison.
    """
    for p in params:
        p.zero_grad()
    backward(loss_fn())
    analytic = {p.name: p.grad.copy() for p in params}

    rng = np.random.default_rng(seed)
    errors: dict[str, float] = {}
    for p in params:
        flat = p.data.reshape(-1)
        n = flat.size
        if max_elements_per_param is not None and n > max_elements_per_param:
            indices = rng.choice(n, size=max_elements_per_param, replace=False)
        else:
            indices = range(n)
        a_flat = analytic[p.name].reshape(-1)
        worst = 0.0
        for i in indices:
            original = flat[i]
            flat[i] = original + epsilon
            f_plus = loss_fn().item()
            flat[i] = original - epsilon
            f_minus = loss_fn().item()
            flat[i] = original
            numeric = (f_plus - f_minus) / (2.0 * epsilon)
            denom = max(abs(a_flat[i]), abs(numeric), 1e-8)
            worst = max(worst, abs(a_flat[i] - numeric) / denom)
        errors[p.name] = worst
        p.zero_grad()
    return GradCheckReport(errors)

"""Distributed constrained power control (DCPC), the optimization baseline.

Both users scale their power by target/measured SINR each frame, capped at
their maximum level. Powers are continuous.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidMeasurementError
from .radio import RadioScenario, compute_sinr


def dcpc_update(p: float, sinr: float, eta: float, p_max: float) -> float:
    if sinr <= 0:
        raise InvalidMeasurementError(f"SINR must be positive, got {sinr}")
    return min(p_max, eta * p / sinr)


@dataclass
class DcpcResult:
    trajectory: np.ndarray  # rows of (step, p1, p2, sinr1, sinr2); row 0 is the start
    converged: bool
    steps: int | None       # first step with both SINRs within tolerance

    @property
    def final_sinrs(self) -> tuple[float, float]:
        return float(self.trajectory[-1, 3]), float(self.trajectory[-1, 4])


def run_dcpc(scenario: RadioScenario, p1: float, p2: float, max_steps: int = 200,
             tol: float = 1e-3) -> DcpcResult:
    eta1, eta2 = scenario.sinr_threshold
    p1_max, p2_max = scenario.primary_levels[-1], scenario.secondary_levels[-1]
    rows = []
    for step in range(max_steps + 1):
        s1 = float(compute_sinr(scenario, p1, p2, 1))
        s2 = float(compute_sinr(scenario, p1, p2, 2))
        rows.append((step, p1, p2, s1, s2))
        if abs(s1 - eta1) < tol and abs(s2 - eta2) < tol:
            return DcpcResult(np.array(rows), True, step)
        if step == max_steps:
            break
        p1, p2 = dcpc_update(p1, s1, eta1, p1_max), dcpc_update(p2, s2, eta2, p2_max)
    return DcpcResult(np.array(rows), False, None)

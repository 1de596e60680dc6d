"""Central tolerance record.

All numerical thresholds live here. ``FEASGOV_TOL_SCALE`` multiplies every
value, which is handy when chasing a numerical issue.
"""
import os
from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    feas: float = 1e-8  # QP primal feasibility
    opt: float = 1e-8  # QP stationarity / complementarity
    lp: float = 1e-7  # LP optimal value
    redundancy: float = 1e-8  # slack below which a row counts as implied
    containment: float = 1e-6  # contains()
    rank: float = 1e-10  # relative rank decisions
    membership: float = 1e-8  # point-in-polyhedron row tolerance
    phase1: float = 1e-7  # infeasibility slack threshold
    dare: float = 1e-12  # Riccati fixed-point step
    residual: float = 1e-10  # DARE / Lyapunov residual (relative to max(1, |P|))

    def scaled(self, factor):
        return replace(self, **{f.name: getattr(self, f.name) * factor for f in fields(self)})


def _from_env():
    scale = float(os.environ.get("FEASGOV_TOL_SCALE", "1"))
    return Tolerances().scaled(scale) if scale != 1.0 else Tolerances()


TOL = _from_env()

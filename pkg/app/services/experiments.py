import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .errors import MalformedInputError, RangeError
from .geometry_core import Polytope, regular_polygon, sphere_polytope
from .valuations import intrinsic_volume, steiner, tube_volume_monte_carlo

logger = logging.getLogger(__name__)

# intrinsic volumes of the unit disk and the unit 3-ball
LIMITS: Dict[str, Tuple[float, ...]] = {
    "disk": (1.0, math.pi, math.pi),
    "ball": (1.0, 4.0, 2.0 * math.pi, 4.0 * math.pi / 3.0),
}

APPROXIMANTS = {
    "disk": regular_polygon,
    "ball": sphere_polytope,
}


def convergence_experiment(body: str, m_list: Sequence[int], k: int) -> pd.DataFrame:
    """Rows (m, V_k(P_m), |V_k(P_m) - V_k(limit)|, empirical order in 1/m)."""
    if body not in LIMITS:
        raise MalformedInputError(f"Unsupported body {body!r}", bodies=sorted(LIMITS))
    limits = LIMITS[body]
    if not 0 <= k < len(limits):
        raise RangeError(f"k must lie in 0..{len(limits) - 1} for {body}", k=k)
    m_list = list(m_list)
    if any(b <= a for a, b in zip(m_list, m_list[1:])):
        raise MalformedInputError("m_list must be increasing", m_list=m_list)
    rows = []
    for m in m_list:
        P = APPROXIMANTS[body](m)
        value = intrinsic_volume(P, k)
        rows.append({"m": m, "value": value, "error": abs(value - limits[k])})
        logger.info(f"{body} m={m}: V_{k} = {value:.12f}")
    frame = pd.DataFrame(rows, columns=["m", "value", "error"])
    frame["order"] = empirical_orders(frame["m"].tolist(), frame["error"].tolist())
    return frame


def empirical_orders(ms: Sequence[int], errors: Sequence[float]) -> List[float]:
    """log(e_i / e_{i+1}) / log(m_{i+1} / m_i); NaN where undefined."""
    orders = [float("nan")]
    for (m0, e0), (m1, e1) in zip(zip(ms, errors), zip(ms[1:], errors[1:])):
        if e0 > 0 and e1 > 0:
            orders.append(math.log(e0 / e1) / math.log(m1 / m0))
        else:
            orders.append(float("nan"))
    return orders


def steiner_experiment(polytopes: Sequence[Tuple[str, Polytope]], eps_list: Sequence[float],
                       samples: Optional[int] = None, seed: int = 0) -> pd.DataFrame:
    """Closed-form Steiner polynomial against Monte-Carlo tube volumes."""
    rows = []
    for name, P in polytopes:
        for eps in eps_list:
            closed = steiner(P, eps)
            estimate, stderr = tube_volume_monte_carlo(P, eps, samples, seed)
            rows.append({"polytope": name, "eps": eps, "closed_form": closed, "monte_carlo": estimate,
                         "stderr": stderr, "rel_error": abs(closed - estimate) / closed})
    return pd.DataFrame(rows, columns=["polytope", "eps", "closed_form", "monte_carlo", "stderr", "rel_error"])


def min_order(frame: pd.DataFrame) -> float:
    orders = frame["order"].to_numpy(dtype=float)
    orders = orders[~np.isnan(orders)]
    return float(orders.min()) if orders.size else float("nan")

"""ZeroCollision MAC: exact convergence analysis and a slot-level simulator with CSMA and TDMA baselines."""

from .analysis import (AnalysisRow, ReservationChain, analyze_pair, build_chain, exact_expected_time,
                       expected_cycles, reservation_pmf, reservation_probability, upper_bound_time)
from .timing import QUOTED_TIMING, PhyParameters, TimingParameters

__all__ = [
    "QUOTED_TIMING", "AnalysisRow", "PhyParameters", "ReservationChain", "TimingParameters", "analyze_pair",
    "build_chain", "exact_expected_time", "expected_cycles", "reservation_pmf", "reservation_probability",
    "upper_bound_time",
]

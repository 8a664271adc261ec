"""Performance analysis of contention-based access periods in directional
60 GHz WLANs: analytical Markov-chain model, interference-region geometry and
a slot-level Monte Carlo simulator."""

from .analytical import (DtiConfig, EdcaParams, Metrics, ModelSolution,
                         SolverOptions, collision_system, delay, drop_rate,
                         evaluate_metrics, macro_chain, throughput,
                         transmission_chain)
from .geometry import (BeamGeometry, GroupCounts, LinkBudget, RegionAreas,
                       coverage_radius, group_counts, region_areas)
from .simulator import BiSchedule, SimMetrics, Topology, place_stations, replicate, run

__version__ = "0.1.0"

"""Learned power allocation for latency-optimal HARQ over correlated fading."""

from .analytics import (AsymptoticFactors, asymptotic_outage, average_power,
                        correlation_factor, evaluate, ir_rate_factor, latency,
                        long_term_throughput, outage_profile,
                        scheme_rate_factor)
from .gcn import (GcnWeights, LayerSpec, clamp_output, forward, init_weights,
                  load_checkpoint, save_checkpoint)
from .graph import correlation_matrix, normalize_adjacency, session_adjacency
from .montecarlo import (McEstimate, empirical_performance, estimate_outage,
                         estimate_outage_conditional, estimate_profile,
                         outage_event, sample_channel_coeffs,
                         sample_channel_gains)
from .oracle import (ComplexityGuard, GridInfeasible, GridSpec, OracleResult,
                     default_grid, grid_search, is_feasible)
from .training import (TrainConfig, TrainResult, TrainingDiverged,
                       evaluate_policy, train)
from .types import (OUTAGE_CAP, P_MIN_WATTS, ChannelParams, LinkConfig,
                    PerformanceReport, PowerPolicy, Scheme, dbw_to_watts)

__version__ = "0.1.0"

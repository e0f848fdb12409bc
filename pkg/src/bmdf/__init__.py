"""Block-Markov decode-and-forward relaying over Rayleigh fading.

Single-layer and two-layer (broadcast approach) throughput of a source
helped by an oblivious relay: closed forms, nested-integral decoding
probabilities, a seeded Monte Carlo oracle and figure sweeps.
"""

from .channel import (
    ChannelParams,
    CorrelationPair,
    FadingDraw,
    PowerSplit,
    SingleLayerRates,
    TwoLayerInfos,
    db_to_linear,
    df_rate_single,
    linear_to_db,
    relay_layer_infos,
    sample_fading,
    two_layer_mutual_infos,
)
from .errors import DomainError, InfeasibleCorrelationError, InfeasibleRateError
from .montecarlo import DEFAULT_SEED, Provenance, ThroughputEstimate, estimate
from .single_layer import (
    RegionKind,
    ThroughputMode,
    audit_conjecture1,
    classify_rho_region,
    correlated_allocation,
    crossover_x0,
    direct_throughput,
    gamma0,
    maximize_throughput,
    oblivious_bm_throughput,
    p_s_star,
    q_min_single,
    success_prob_pair,
    success_prob_su,
    throughput,
    unimodality_check,
)
from .special import WBranch, lambert_w
from .sweeps import FigureId, SweepSpec, Table, figure_spec, gain_over_direct, run_sweep
from .two_layer import (
    LayerRates,
    OptimizeMode,
    average_throughput_mc,
    average_throughput_uncorrelated,
    classify_conic,
    decode_events,
    optimize_siso_layering,
    optimize_two_layer_throughput,
    p_layer1_miso_analytic,
    p_layer2_miso_analytic,
    q_min_layers,
)

__version__ = "0.1.0"

"""Exact 1-bit precoding for the MU-MIMO downlink.

A branch-and-bound tree search finds the sum-MSE-optimal constant-modulus
transmit vector, with an exhaustive oracle, Wiener-filter baselines and a
seeded Monte-Carlo BER/complexity harness around it.
"""

from .version import __version__
from .errors import (
    PrecodingError,
    SingularMatrix,
    NotHermitian,
    DegenerateInstance,
    ZeroCorrelation,
    InstanceTooLarge,
    ParseError,
)
from .model import (
    TransmitAlphabet,
    Constellation,
    PrecodingProblem,
    PrecodeResult,
    SearchStats,
    augment_channel,
    mrt_vector,
    wf_vector,
    quantize_to_indices,
    quantize_to_alphabet,
    optimal_beta,
    qp_objective,
    cmqp_objective,
    canonicalize_sign,
)
from .branch_bound import (
    TrickConfig,
    ChannelFactor,
    TriangularizedProblem,
    SearchNode,
    factorize_channel,
    prepare,
    node_state,
    extend_node,
    child_cost,
    future_numerator_bound,
    bb1_solve,
)
from .baselines import (
    exhaustive_solve,
    wf_quantized_precoder,
    wf_infinite_precoder,
    exhaustive_visit_count,
    reference_visit_count,
    MAX_EXHAUSTIVE_ANTENNAS,
)
from .sim import (
    SimConfig,
    SimResult,
    SnrPoint,
    run_ber_sweep,
    stream,
    generate_channel,
    generate_symbols,
    transmit_detect,
    snr_db_to_n0,
    write_csv,
    to_json_dict,
    config_metadata,
)

__all__ = [
    "__version__",
    "PrecodingError", "SingularMatrix", "NotHermitian", "DegenerateInstance",
    "ZeroCorrelation", "InstanceTooLarge", "ParseError",
    "TransmitAlphabet", "Constellation", "PrecodingProblem", "PrecodeResult",
    "SearchStats", "augment_channel", "mrt_vector", "wf_vector",
    "quantize_to_indices", "quantize_to_alphabet", "optimal_beta",
    "qp_objective", "cmqp_objective", "canonicalize_sign",
    "TrickConfig", "ChannelFactor", "TriangularizedProblem", "SearchNode",
    "factorize_channel", "prepare", "node_state", "extend_node",
    "child_cost", "future_numerator_bound", "bb1_solve",
    "exhaustive_solve", "wf_quantized_precoder", "wf_infinite_precoder",
    "exhaustive_visit_count", "reference_visit_count", "MAX_EXHAUSTIVE_ANTENNAS",
    "SimConfig", "SimResult", "SnrPoint", "run_ber_sweep", "stream",
    "generate_channel", "generate_symbols", "transmit_detect", "snr_db_to_n0",
    "write_csv", "to_json_dict", "config_metadata",
]

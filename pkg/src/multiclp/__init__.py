"""Resource partitioning for multi-processor CNN convolution accelerators on FPGAs."""
from .cnn import (CnnSpec, CnnSpecError, LayerDims, builtin_alexnet, builtin_vgg_e, load_cnn, parse_cnn_spec,
                  serialize_cnn_spec, total_macs)
from .cost import (GIB, ClpConfig, ClpShape, Design, DesignError, LayerTiling, Metrics, ResourceBudget, bram_count,
                   buffer_spec, clp_peak_bandwidth, cycles, design_metrics, make_design, num_dsp, transfer_breakdown)
from .compute import ComputeCandidate, cycles_lower_bound, optimize_compute
from .optimizer import (InfeasibleError, OptimizerConfig, optimize_memory, optimize_multi_clp, pick_best,
                        run_optimizer, tradeoff_frontier)
from .oracle import brute_force_optimize
from .pipeline import SegmentTrace, simulate

__all__ = [
    "CnnSpec", "CnnSpecError", "LayerDims", "builtin_alexnet", "builtin_vgg_e", "load_cnn", "parse_cnn_spec",
    "serialize_cnn_spec", "total_macs",
    "GIB", "ClpConfig", "ClpShape", "Design", "DesignError", "LayerTiling", "Metrics", "ResourceBudget",
    "bram_count", "buffer_spec", "clp_peak_bandwidth", "cycles", "design_metrics", "make_design", "num_dsp",
    "transfer_breakdown",
    "ComputeCandidate", "cycles_lower_bound", "optimize_compute",
    "InfeasibleError", "OptimizerConfig", "optimize_memory", "optimize_multi_clp", "pick_best", "run_optimizer",
    "tradeoff_frontier", "brute_force_optimize", "SegmentTrace", "simulate",
]

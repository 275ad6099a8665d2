"""Simulator for online model specialization on class-skewed input streams."""
from .analysis import (detection_probability, prob_dominant_class, prob_nondominant_class,
                       recommend_support, skew_cdf, window_support_table)
from .cascade import CascadedClassifier, cascaded_classify, estimate_accuracy
from .config import RunConfig, load_config, preset
from .harness import compute_regret, run_simulation, sweep
from .models import (OTHER, CompactProfile, OracleProfile, SpecializationParams,
                     interpolate_profile, oracle_classify, specialize, specialized_classify)
from .stream import SegmentSpec, StreamSpec, generate_stream, load_trace
from .weg import WegConfig, WegController, apply_ablation, dom_classes, support_threshold

__version__ = "0.1.0"

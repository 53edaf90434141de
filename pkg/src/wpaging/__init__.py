"""Weighted paging with predictions: exact offline optima, prediction-driven
online policies, lower-bound input generators and an experiment harness."""

from .adversaries import (BlockRecord, BlockStream, det_prp_adversary, lookahead_padding,
                          rand_prp_generator, s_string)
from .algorithms import (LRU, AlgI, EvictCheapest, Follow, Learn, Static, alg_i_family,
                         evict_cheapest, follow, idle, learn, lru, make_algorithm, static_algo)
from .core import (HIT, Action, Charging, CostLedger, PagingRun, ProtocolViolation, ScheduleReplay,
                   ledger_total_between, serve)
from .harness import ExperimentConfig, ResultRow, emit, run_experiment
from .metrics import index_maps, l1, led, led_subrange, led_value, lpd
from .offline import (SizeLimitError, batch_optimal, belady, opt_dp, opt_plus1_dp, opt_plus1_lp)
from .predictions import (NoiseSpec, PredictionStream, derive_lookahead, derive_perfect_prp,
                          derive_sprp, perturb)

__version__ = "0.1.0"

"""Experiment runner: instance families, per-algorithm bound checks and CSV/JSON output."""

from __future__ import annotations

import csv
import json
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from decimal import Context, Decimal
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import yaml

from . import adversaries as adv
from .algorithms import EXTRA_SLOT, Learn, make_algorithm
from .core import Charging, check_weights, read_trace, read_weights, serve, write_trace, write_weights
from .metrics import l1, led_value, lpd
from .offline import DEFAULT_PAGE_LIMIT, SizeLimitError, opt_dp, opt_plus1_dp
from .predictions import NoiseSpec, PredictionStream, derive_sprp, perturb

CSV_FIELDS = ("instance_id", "algo", "k", "cost", "opt_cost", "ratio", "l1", "lpd", "led",
              "led_constrained", "bound_checked", "bound_satisfied")
FAMILIES = ("random", "trace", "det", "rand")
WEIGHT_MENU = (1, 2, 4, 8, 16)


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """Everything needed to regenerate an experiment; round-trips through YAML."""

    family: str = "random"
    algorithms: list = field(default_factory=lambda: ["static"])
    k: list = field(default_factory=lambda: [2])
    c: int = 2
    noise: list = field(default_factory=lambda: [{}])
    trials: int = 10
    seed: int = 0
    charging: str = "evict"
    n_min: int = 3
    n_max: int = 8
    length_min: int = 10
    length_max: int = 40
    weights: str = "menu"  # "menu" ({1,2,4,8,16}) or "ladder" (c**i)
    distribution: str = "mixed"  # "uniform", "zipf" or "mixed"
    blocks: int = 200
    trace: str | None = None
    trace_weights: str | None = None
    prediction: str | None = None
    out: str | None = None
    jobs: int = 1
    page_limit: int = DEFAULT_PAGE_LIMIT

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if isinstance(self.k, int):
            self.k = [self.k]
        if isinstance(self.algorithms, str):
            self.algorithms = [self.algorithms]
        self.charging = Charging.parse(self.charging).value
        for name in self.algorithms:
            if not (name.startswith("alg_i:") or name in ("static", "follow", "idle", "learn",
                                                          "lru", "cheapest")):
                raise ConfigError(f"unknown algorithm {name!r}")
        if self.family in ("det", "rand") and any(a in ("static", "follow", "idle", "learn")
                                                  for a in self.algorithms):
            raise ConfigError("block adversaries drive prediction-free policies only")
        if self.family == "trace" and not (self.trace and self.trace_weights):
            raise ConfigError("trace family needs 'trace' and 'trace_weights'")
        if self.weights not in ("menu", "ladder"):
            raise ConfigError(f"unknown weight scheme {self.weights!r}")
        if self.distribution not in ("uniform", "zipf", "mixed"):
            raise ConfigError(f"unknown request distribution {self.distribution!r}")
        if not self.noise:
            self.noise = [{}]

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = sorted(set(data) - known)
        if extra:
            raise ConfigError(f"unknown config keys: {extra}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a mapping")
        return cls.from_mapping(data)

    def to_mapping(self) -> dict:
        return asdict(self)

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            yaml.safe_dump(self.to_mapping(), fh, sort_keys=True)


@dataclass
class ResultRow:
    instance_id: str
    algo: str
    k: int
    cost: object
    opt_cost: object
    ratio: object  # None when opt_cost is zero
    l1: object = 0
    lpd: object = 0
    led: object = 0
    led_constrained: object = 0
    bound_checked: bool = False
    bound_satisfied: bool = True


@dataclass
class Instance:
    instance_id: str
    k: int
    sequence: list
    predicted: list
    weights: dict


@dataclass
class Violation:
    row: ResultRow
    instance: Instance | None = None
    note: str = ""


def ratio_of(cost, opt):
    return Fraction(cost) / Fraction(opt) if opt else None


# --- instance families ---------------------------------------------------------

def _noise_spec(entry: dict, universe) -> tuple[NoiseSpec, bool]:
    entry = dict(entry or {})
    disjoint = bool(entry.pop("disjoint", False))
    unknown = set(entry) - {"substitution", "insertion", "deletion"}
    if unknown:
        raise ConfigError(f"unknown noise keys: {sorted(unknown)}")
    return NoiseSpec(universe=tuple(universe), **entry), disjoint


def _predict(sequence, weights, noise_entry, seed):
    """Prediction for ``sequence`` under one noise setting; may extend the weight table."""
    spec, disjoint = _noise_spec(noise_entry, sorted(weights))
    if disjoint:
        shift = max(weights) + 1
        weights = dict(weights)
        for p in set(sequence):
            weights[p + shift] = weights[p]
        return [p + shift for p in sequence], weights
    A = perturb(sequence, spec, seed)
    return (A if A else list(sequence[:1])), weights


def random_instance(rng: random.Random, k: int, cfg: ExperimentConfig) -> tuple[list, dict]:
    n = rng.randint(max(cfg.n_min, k + 1), max(cfg.n_max, k + 1))
    length = rng.randint(cfg.length_min, cfg.length_max)
    if cfg.weights == "ladder":
        weights = {p: cfg.c ** p for p in range(n)}
    else:
        weights = {p: rng.choice(WEIGHT_MENU) for p in range(n)}
    dist = cfg.distribution
    if dist == "mixed":
        dist = rng.choice(("uniform", "zipf"))
    if dist == "uniform":
        seq = [rng.randrange(n) for _ in range(length)]
    else:
        ranks = list(range(n))
        rng.shuffle(ranks)
        probs = [1.0 / (ranks[p] + 1) for p in range(n)]
        seq = rng.choices(range(n), weights=probs, k=length)
    return seq, weights


def _trial_seed(cfg: ExperimentConfig, *parts) -> str:
    return "/".join(str(p) for p in (cfg.seed, cfg.family, *parts))


def build_instances(cfg: ExperimentConfig) -> list[Instance]:
    """Instances of the random and trace families, in canonical order."""
    out = []
    if cfg.family == "trace":
        base = read_trace(cfg.trace)
        table = read_weights(cfg.trace_weights)
        fixed_pred = read_trace(cfg.prediction) if cfg.prediction else None
    for k in cfg.k:
        for ni, noise in enumerate(cfg.noise):
            for trial in range(cfg.trials):
                seed = _trial_seed(cfg, k, ni, trial)
                if cfg.family == "random":
                    seq, weights = random_instance(random.Random(seed), k, cfg)
                else:
                    seq, weights = list(base), dict(table)
                if cfg.family == "trace" and fixed_pred is not None:
                    pred = list(fixed_pred)
                else:
                    pred, weights = _predict(seq, weights, noise, seed + "/pred")
                iid = f"{cfg.family}-k{k:02d}-z{ni:02d}-t{trial:05d}"
                out.append(Instance(iid, k, seq, pred, weights))
    return out


# --- evaluation ----------------------------------------------------------------

def _bound(algo: str, inst: Instance, mode: Charging, limit: int):
    """``(cost, opt_cost, checked, satisfied)`` for one algorithm on one instance."""
    B, A, w, k = inst.sequence, inst.predicted, inst.weights, inst.k
    preds = PredictionStream(A)
    if algo == "idle":
        # IDLE is measured on the prediction sequence against the memoryless-slot optimum
        cost = serve(make_algorithm("idle"), A, derive_sprp(A), w, k, mode, extra_slot=True).total
        opt = opt_plus1_dp(A, w, k, limit, mode).cost
        return cost, opt, True, cost <= 3 * opt
    opt = opt_dp(B, w, k, mode, limit).cost
    if algo == "learn":
        alg = Learn(A, limit)
        cost = serve(alg, B, preds, w, k, mode, extra_slot=True).total
        return cost, opt, True, cost <= alg.idle_cost + 12 * led_value(A, B, w, constrained=True)
    alg = make_algorithm(algo, preds, limit)
    cost = serve(alg, B, preds, w, k, mode, extra_slot=algo in EXTRA_SLOT).total
    if algo == "static":
        checked = list(A) == list(B)
        return cost, opt, checked, (not checked) or cost <= 2 * opt
    if algo == "follow":
        return cost, opt, True, cost <= 2 * opt + 6 * l1(A, B, w)
    return cost, opt, False, True


def evaluate_instance(inst: Instance, algorithms: Sequence[str], mode, limit) -> list[ResultRow]:
    mode = Charging.parse(mode)
    A, B, w = inst.predicted, inst.sequence, inst.weights
    metrics = dict(l1=l1(A, B, w), lpd=lpd(A, B, w), led=led_value(A, B, w),
                   led_constrained=led_value(A, B, w, constrained=True))
    rows = []
    for algo in algorithms:
        cost, opt, checked, ok = _bound(algo, inst, mode, limit)
        rows.append(ResultRow(inst.instance_id, algo, inst.k, cost, opt, ratio_of(cost, opt),
                              bound_checked=checked, bound_satisfied=bool(ok), **metrics))
    return rows


def minimize_counterexample(inst: Instance, algo: str, mode, limit) -> Instance:
    """Greedily drop requests (input first, then prediction) while the bound stays violated."""

    def violated(candidate: Instance) -> bool:
        if not candidate.sequence or not candidate.predicted:
            return False
        try:
            _, _, checked, ok = _bound(algo, candidate, Charging.parse(mode), limit)
        except SizeLimitError:
            return False
        return checked and not ok

    best = inst
    for attr in ("sequence", "predicted"):
        i = 0
        while i < len(getattr(best, attr)):
            seq = getattr(best, attr)
            trial = Instance(best.instance_id, best.k, best.sequence, best.predicted, best.weights)
            setattr(trial, attr, seq[:i] + seq[i + 1:])
            if attr == "sequence" and algo == "static" and best.sequence == best.predicted:
                trial.predicted = trial.sequence  # keep perfect predictions perfect
            if violated(trial):
                best = trial
            else:
                i += 1
    return best


def _block_rows(cfg: ExperimentConfig, k: int, trial: int) -> list[ResultRow]:
    mode = Charging.parse(cfg.charging)
    out = []
    for algo in cfg.algorithms:
        iid = f"{cfg.family}-k{k:02d}-t{trial:05d}"
        if cfg.family == "det":
            res = adv.det_prp_adversary(make_algorithm(algo), k, cfg.c, cfg.blocks, mode)
            stream, cost = res.stream, res.ledger.total
            costs = adv.alg_i_costs(stream.collapsed(), k, cfg.c, mode)
            opt = min(costs)
            ok = (sum(costs) <= 32 * cost and 32 * cost >= k * opt
                  and all(b.is_contiguous() for b in stream.blocks)
                  and stream.predictions_consistent())
        else:
            stream = adv.rand_prp_generator(k, cfg.c, cfg.blocks, _trial_seed(cfg, k, trial))
            pages = stream.collapsed()
            w = stream.weights()
            cost = serve(make_algorithm(algo), pages, None, w, k, mode).total
            opt = opt_dp(pages, w, k, mode, cfg.page_limit).cost
            ok = (stream.irregular_count() <= stream.regular_count()
                  and all(b.is_contiguous() for b in stream.blocks)
                  and stream.predictions_consistent())
        row = ResultRow(iid, algo, k, cost, opt, ratio_of(cost, opt),
                        bound_checked=True, bound_satisfied=bool(ok))
        out.append(row)
    return out


def _job(args):
    kind, cfg_map, payload = args
    cfg = ExperimentConfig.from_mapping(cfg_map)
    if kind == "instance":
        return evaluate_instance(payload, cfg.algorithms, cfg.charging, cfg.page_limit)
    k, trial = payload
    return _block_rows(cfg, k, trial)


def run_experiment(config: ExperimentConfig, write: bool = True):
    """Run every (instance, algorithm) pair; returns ``(rows, violations)``.

    Rows come back sorted by instance id and then by the configured
    algorithm order, whatever the degree of parallelism.
    """
    cfg_map = config.to_mapping()
    if config.family in ("random", "trace"):
        instances = build_instances(config)
        jobs = [("instance", cfg_map, inst) for inst in instances]
    else:
        instances = []
        jobs = [("block", cfg_map, (k, t)) for k in config.k for t in range(config.trials)]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            batches = list(pool.map(_job, jobs, chunksize=max(1, len(jobs) // (4 * config.jobs))))
    else:
        batches = [_job(j) for j in jobs]
    order = {a: i for i, a in enumerate(config.algorithms)}
    rows = sorted((r for batch in batches for r in batch), key=lambda r: (r.instance_id, order[r.algo]))

    by_id = {inst.instance_id: inst for inst in instances}
    violations = []
    for row in rows:
        if row.bound_checked and not row.bound_satisfied:
            inst = by_id.get(row.instance_id)
            if inst is not None:
                inst = minimize_counterexample(inst, row.algo, config.charging, config.page_limit)
            violations.append(Violation(row, inst))

    if write and config.out:
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        if rows:
            emit(rows, "csv", out / "results.csv")
            emit(rows, "json", out / "results.json")
        for v in violations:
            dump_counterexample(v, out / "counterexamples")
    return rows, violations


def dump_counterexample(v: Violation, root: Path) -> Path:
    d = Path(root) / f"{v.row.instance_id}-{v.row.algo.replace(':', '_')}"
    d.mkdir(parents=True, exist_ok=True)
    if v.instance is not None:
        write_trace(d / "input.txt", v.instance.sequence)
        write_trace(d / "pred.txt", v.instance.predicted)
        write_weights(d / "weights.txt", check_weights(v.instance.weights))
    with open(d / "row.json", "w") as fh:
        json.dump(_row_json(v.row), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return d


# --- emission ------------------------------------------------------------------

_CTX = Context(prec=40)


def decimal12(x) -> str:
    """Decimal rendering with 12 significant digits."""
    f = Fraction(x)
    d = _CTX.divide(Decimal(f.numerator), Decimal(f.denominator))
    return format(d, ".12g")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, Fraction)):
        return decimal12(value)
    return str(value)


def _exact(value):
    if value is None:
        return None
    f = Fraction(value)
    return {"decimal": decimal12(f), "num": f.numerator, "den": f.denominator}


def _row_json(row: ResultRow) -> dict:
    out = {}
    for name in CSV_FIELDS:
        v = getattr(row, name)
        if name in ("instance_id", "algo", "k", "bound_checked", "bound_satisfied"):
            out[name] = v
        else:
            out[name] = _exact(v)
    return out


def emit(rows: Sequence[ResultRow], fmt: str, path) -> None:
    if not rows:
        raise ValueError("nothing to emit")
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_FIELDS)
            for row in rows:
                writer.writerow([_cell(getattr(row, f)) for f in CSV_FIELDS])
    elif fmt == "json":
        with open(path, "w") as fh:
            json.dump([_row_json(r) for r in rows], fh, indent=1)
            fh.write("\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")


def load_json_rows(path) -> list[ResultRow]:
    """Parse rows written by :func:`emit` in JSON form, restoring exact rationals."""
    with open(path) as fh:
        data = json.load(fh)
    rows = []
    for item in data:
        vals = {}
        for name in CSV_FIELDS:
            v = item[name]
            if isinstance(v, dict):
                f = Fraction(v["num"], v["den"])
                v = f.numerator if f.denominator == 1 else f
            vals[name] = v
        rows.append(ResultRow(**vals))
    return rows


def summarize(rows: Sequence[ResultRow]) -> dict:
    """Per-algorithm row count, worst ratio and violation count."""
    out: dict[str, dict] = {}
    for r in rows:
        s = out.setdefault(r.algo, {"rows": 0, "max_ratio": None, "violations": 0})
        s["rows"] += 1
        if r.ratio is not None and (s["max_ratio"] is None or r.ratio > s["max_ratio"]):
            s["max_ratio"] = r.ratio
        if r.bound_checked and not r.bound_satisfied:
            s["violations"] += 1
    return out

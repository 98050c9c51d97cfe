"""Lottery-ticket experiment drivers.

* ``run_iterative``: train, prune 20% of survivors by magnitude, rewind to
  the seeded initialisation, retrain, until few enough weights remain.
* ``run_oneshot``: train once unpruned, then derive one mask per pruning
  ratio from those trained weights and retrain each from the rewound init.
* ``run_ea``: strong-ticket search. Weights stay frozen at initialisation;
  an evolutionary algorithm searches over masks only.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Dataset, prepare
from .errors import ContractError, NumericError
from .models import ModelSpec, count_parameters, init_params
from .pruning import (
    RemainingWeights,
    apply_mask,
    bits_to_mask,
    initial_mask,
    magnitude_prune,
    mask_to_bits,
    remaining_weights,
)
from .training import TrainConfig, TrainHistory, evaluate, train

log = logging.getLogger(__name__)

PRUNE_FRACTION = 0.2


def default_ratios(rounds: int = 12) -> list:
    """One-shot ratios matching the iterative schedule: 1 - 0.8**k."""
    return [1 - (1 - PRUNE_FRACTION) ** k for k in range(1, rounds + 1)]


@dataclass
class RunRecord:
    """One trained model at one remaining-weight level."""

    mode: str
    dataset: str
    model: str
    seed: int
    round: int
    remaining: RemainingWeights
    history: TrainHistory
    mask: np.ndarray
    n_parameters: int
    error: str | None = None

    @property
    def prunable_count(self) -> int:
        return int(self.mask.size)

    @property
    def best_val_accuracy(self) -> float:
        return self.history.best_val_accuracy

    def to_dict(self) -> dict:
        return {
            "kind": "weak",
            "mode": self.mode,
            "dataset": self.dataset,
            "model": self.model,
            "seed": self.seed,
            "round": self.round,
            "remaining_count": self.remaining.count,
            "remaining_percent": self.remaining.percent,
            "prunable_count": self.prunable_count,
            "n_parameters": self.n_parameters,
            "best_val_accuracy": self.best_val_accuracy if self.history.val_accuracy else None,
            "history": self.history.to_dict(),
            "mask": mask_to_bits(self.mask),
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        return cls(
            mode=d["mode"],
            dataset=d["dataset"],
            model=d["model"],
            seed=d["seed"],
            round=d["round"],
            remaining=RemainingWeights(d["remaining_count"], d["remaining_percent"]),
            history=TrainHistory.from_dict(d["history"]),
            mask=bits_to_mask(d["mask"]),
            n_parameters=d["n_parameters"],
            error=d.get("error"),
        )


def _seeded(spec: ModelSpec, config: TrainConfig, seed: int):
    return replace(spec, seed=seed), replace(config, seed=seed)


def run_iterative(
    seeds,
    rw_threshold: int,
    spec: ModelSpec,
    train_config: TrainConfig,
    dataset: Dataset,
    *,
    prune_fraction: float = PRUNE_FRACTION,
    rounding: str = "floor",
    train_fraction: float = 0.8,
) -> list:
    """Iterative magnitude pruning with rewinding, one record per round."""
    if rw_threshold < 0:
        raise ContractError("rw_threshold must be >= 0")
    seeds = list(seeds)
    if not seeds:
        raise ContractError("need at least one seed")
    records = []
    for seed in seeds:
        s_spec, s_config = _seeded(spec, train_config, seed)
        split_data = prepare(dataset, seed, train_fraction)
        mask = initial_mask(s_spec)
        previous = -1
        i = 0
        while True:
            # rewind: identical init every round
            params = apply_mask(init_params(s_spec), mask)
            rec = RunRecord(
                "weak-iterative", dataset.name, spec.family, seed, i,
                remaining_weights(mask), TrainHistory(), mask.copy(), count_parameters(s_spec),
            )
            try:
                params, rec.history = train(s_spec, params, mask, split_data, s_config)
            except NumericError as exc:
                log.warning("seed %d round %d failed: %s", seed, i, exc)
                rec.error = str(exc)
                records.append(rec)
                break
            records.append(rec)
            log.info("seed %d round %d: %d weights, best val %.3f", seed, i, rec.remaining.count, rec.best_val_accuracy)
            i += 1
            mask = magnitude_prune(params, mask, prune_fraction, rounding)
            rw = int(mask.sum())
            if rw <= rw_threshold or rw == previous:
                break
            previous = rw
    return records


def run_oneshot(
    seeds,
    pruning_ratios,
    spec: ModelSpec,
    train_config: TrainConfig,
    dataset: Dataset,
    *,
    rounding: str = "floor",
    train_fraction: float = 0.8,
) -> list:
    """One-shot pruning at each ratio from the unpruned model's trained weights."""
    ratios = list(pruning_ratios)
    if any(not 0 < r < 1 for r in ratios) or any(b <= a for a, b in zip(ratios, ratios[1:])):
        raise ContractError("pruning ratios must lie in (0, 1) and be strictly increasing")
    seeds = list(seeds)
    if not seeds:
        raise ContractError("need at least one seed")
    records = []
    for seed in seeds:
        s_spec, s_config = _seeded(spec, train_config, seed)
        split_data = prepare(dataset, seed, train_fraction)
        full = initial_mask(s_spec)
        init = init_params(s_spec)
        n_params = count_parameters(s_spec)
        base = RunRecord("weak-oneshot", dataset.name, spec.family, seed, 0,
                         remaining_weights(full), TrainHistory(), full, n_params)
        try:
            trained, base.history = train(s_spec, init, full, split_data, s_config)
        except NumericError as exc:
            base.error = str(exc)
            records.append(base)
            continue
        records.append(base)
        for i, ratio in enumerate(ratios, start=1):
            mask = magnitude_prune(trained, full, ratio, rounding)
            rec = RunRecord("weak-oneshot", dataset.name, spec.family, seed, i,
                            remaining_weights(mask), TrainHistory(), mask, n_params)
            try:
                _, rec.history = train(s_spec, apply_mask(init, mask), mask, split_data, s_config)
            except NumericError as exc:
                rec.error = str(exc)
                records.append(rec)
                break
            records.append(rec)
    return records


def level_accuracies(records) -> dict:
    """Mean best validation accuracy per remaining-weight percent."""
    groups = defaultdict(list)
    for r in records:
        if r.error is None and r.history.val_accuracy:
            groups[r.remaining.percent].append(r.best_val_accuracy)
    return {level: float(np.mean(v)) for level, v in sorted(groups.items(), reverse=True)}


def detect_winning_ticket(records, baseline_accuracy: float | None = None):
    """Smallest pruned remaining-percent whose mean accuracy reaches the baseline.

    The baseline defaults to the unpruned (100%) mean. With only the
    unpruned level present the answer is 100.0; when pruned levels exist
    but none reaches the baseline the answer is ``None``.
    """
    levels = level_accuracies(records)
    if 100.0 not in levels:
        raise ContractError("records must include the unpruned level")
    baseline = levels[100.0] if baseline_accuracy is None else baseline_accuracy
    pruned = {k: v for k, v in levels.items() if k < 100.0}
    if not pruned:
        return 100.0 if levels[100.0] >= baseline - 1e-12 else None
    winners = [k for k, v in pruned.items() if v >= baseline - 1e-12]
    return min(winners) if winners else None


# --- strong lottery tickets ----------------------------------------------


@dataclass(frozen=True)
class EAConfig:
    mutation_rate: float = 0.05
    migrant_keep_prob: float = 0.5
    select_percent: int = 33
    crossover_percent: int = 66
    mutation_percent: int = 95
    fitness_split: str = "train"
    tie_break: str = "sparser"

    def __post_init__(self):
        if not 0 <= self.mutation_rate <= 1 or not 0 <= self.migrant_keep_prob <= 1:
            raise ContractError("rates must lie in [0, 1]")
        if not 0 < self.select_percent <= self.crossover_percent <= self.mutation_percent <= 100:
            raise ContractError("phase percentages must be increasing within (0, 100]")
        if self.fitness_split not in ("train", "validation"):
            raise ContractError("fitness_split must be 'train' or 'validation'")
        if self.tie_break not in ("sparser", "stable"):
            raise ContractError("tie_break must be 'sparser' or 'stable'")


@dataclass
class Individual:
    mask: np.ndarray
    fitness: float | None = None


@dataclass
class GenerationRecord:
    generation: int
    best_fitness: float
    best_remaining: RemainingWeights
    best_val_accuracy: float
    mean_fitness: float
    population_size: int


@dataclass
class EARecord:
    dataset: str
    model: str
    seed: int
    generations: list = field(default_factory=list)
    best_mask: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "kind": "ea",
            "mode": "strong-ea",
            "dataset": self.dataset,
            "model": self.model,
            "seed": self.seed,
            "prunable_count": int(self.best_mask.size),
            "generations": [
                {
                    "generation": g.generation,
                    "best_fitness": g.best_fitness,
                    "best_remaining_count": g.best_remaining.count,
                    "best_remaining_percent": g.best_remaining.percent,
                    "best_val_accuracy": g.best_val_accuracy,
                    "mean_fitness": g.mean_fitness,
                    "population_size": g.population_size,
                }
                for g in self.generations
            ],
            "best_mask": mask_to_bits(self.best_mask),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EARecord":
        gens = [
            GenerationRecord(
                g["generation"],
                g["best_fitness"],
                RemainingWeights(g["best_remaining_count"], g["best_remaining_percent"]),
                g["best_val_accuracy"],
                g["mean_fitness"],
                g["population_size"],
            )
            for g in d["generations"]
        ]
        return cls(d["dataset"], d["model"], d["seed"], gens, bits_to_mask(d["best_mask"]))


def phase_sizes(n_ind: int, config: EAConfig = EAConfig()):
    """Population targets after selection, crossover and mutation (ceil)."""

    def ceil_pct(p):
        return -(-p * n_ind // 100)

    return (
        ceil_pct(config.select_percent),
        ceil_pct(config.crossover_percent),
        ceil_pct(config.mutation_percent),
    )


def crossover(mask_a: np.ndarray, mask_b: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Uniform crossover: each bit from either parent with probability 1/2."""
    if mask_a.shape != mask_b.shape:
        raise ContractError("parents must have the same length")
    return np.where(rng.random(mask_a.size) < 0.5, mask_a, mask_b)


def mutate(mask: np.ndarray, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Flip each bit independently with probability ``rate``."""
    if not 0 <= rate <= 1:
        raise ContractError("rate must lie in [0, 1]")
    return mask ^ (rng.random(mask.size) < rate)


def migrate(spec: ModelSpec, rng: np.random.Generator, keep_prob: float = 0.5) -> Individual:
    """A fresh individual whose bits are kept with probability ``keep_prob``."""
    return Individual(rng.random(spec.n_prunable) < keep_prob)


def run_ea(seeds, n_gen: int, n_ind: int, spec: ModelSpec, ea_config: EAConfig, dataset: Dataset,
           *, train_fraction: float = 0.8) -> list:
    """Evolve masks over frozen initial weights; one ``EARecord`` per seed.

    Each record holds ``n_gen + 1`` generation entries: one per fitness
    measurement at the start of every generation plus the final one.
    """
    if n_ind < 6 or n_gen < 1:
        raise ContractError("need n_ind >= 6 and n_gen >= 1")
    n_sel, n_cx, n_mut = phase_sizes(n_ind, ea_config)
    records = []
    for seed in seeds:
        s_spec = replace(spec, seed=seed)
        split_data = prepare(dataset, seed, train_fraction)
        fit_split = split_data.train if ea_config.fitness_split == "train" else split_data.validation
        base = init_params(s_spec)
        rng = np.random.default_rng(seed)
        cache = {}

        def fitness(mask):
            key = mask.tobytes()
            if key not in cache:
                cache[key] = evaluate(s_spec, apply_mask(base, mask), fit_split)
            return cache[key]

        full = initial_mask(s_spec)
        population = [Individual(mutate(full, ea_config.mutation_rate, rng)) for _ in range(n_ind)]
        record = EARecord(dataset.name, spec.family, seed)

        def rank():
            # best first; equal fitness keeps population order or prefers fewer weights
            scores = np.array([ind.fitness for ind in population])
            if ea_config.tie_break == "stable":
                return scores, np.argsort(-scores, kind="stable")
            counts = np.array([int(ind.mask.sum()) for ind in population])
            return scores, np.lexsort((counts, -scores))

        def measure(generation):
            for ind in population:
                ind.fitness = fitness(ind.mask)
            scores, order = rank()
            best = population[int(order[0])]
            record.generations.append(GenerationRecord(
                generation,
                best.fitness,
                remaining_weights(best.mask),
                evaluate(s_spec, apply_mask(base, best.mask), split_data.validation),
                float(scores.mean()),
                len(population),
            ))
            record.best_mask = best.mask.copy()
            return order

        for generation in range(n_gen):
            order = measure(generation)
            survivors = [population[i] for i in order[:n_sel]]
            population = list(survivors)
            while len(population) < n_cx:
                a, b = rng.choice(n_sel, size=2, replace=False)
                population.append(Individual(crossover(survivors[a].mask, survivors[b].mask, rng)))
            while len(population) < n_mut:
                parent = survivors[rng.integers(n_sel)]
                population.append(Individual(mutate(parent.mask, ea_config.mutation_rate, rng)))
            while len(population) < n_ind:
                population.append(migrate(s_spec, rng, ea_config.migrant_keep_prob))
        measure(n_gen)
        log.info("seed %d: best fitness %.3f at %.1f%% remaining", seed,
                 record.generations[-1].best_fitness, record.generations[-1].best_remaining.percent)
        records.append(record)
    return records

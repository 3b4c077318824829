"""Simulated annealing over (n_estimators, max_depth) of an importance-guided forest.

The search maximises the composite fitness on validation data. Worse
candidates are accepted with probability exp(dF / temp), the temperature
cools geometrically, and equal-fitness bests resolve to the simpler
configuration.
"""

from dataclasses import dataclass, field
import math
from typing import Callable, Optional

import numpy as np
from loguru import logger

from dataset import Dataset
from guided_forest import fit_figrf
from metrics import evaluate
from models import FigrfConfig

MIN_ESTIMATORS, MAX_ESTIMATORS = 50, 150
MIN_DEPTH, MAX_DEPTH = 5, 20
# Unbounded depth ranks just above the deepest bounded setting
UNBOUNDED_DEPTH_RANK = MAX_DEPTH + 1

ESTIMATOR_STEPS = tuple(s for s in range(-10, 11) if s != 0)
DEPTH_STEPS = (-2, -1, 1, 2)
DEPTH_CHOICES = tuple(range(MIN_DEPTH, MAX_DEPTH + 1)) + (None,)


@dataclass(frozen=True)
class HyperParams:
    """A point in the search box; ``max_depth=None`` means unbounded."""

    n_estimators: int
    max_depth: Optional[int]

    def __post_init__(self):
        if not MIN_ESTIMATORS <= self.n_estimators <= MAX_ESTIMATORS:
            raise ValueError(
                f"n_estimators must be in [{MIN_ESTIMATORS}, {MAX_ESTIMATORS}], got {self.n_estimators}"
            )
        if self.max_depth is not None and not MIN_DEPTH <= self.max_depth <= MAX_DEPTH:
            raise ValueError(
                f"max_depth must be in [{MIN_DEPTH}, {MAX_DEPTH}] or None, got {self.max_depth}"
            )

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {"n_estimators": self.n_estimators, "max_depth": self.max_depth}


@dataclass(frozen=True)
class SaConfig:
    initial_temperature: float = 1.0
    cooling_rate: float = 0.95
    max_iterations: int = 30
    seed: int = 0

    def __post_init__(self):
        if not self.initial_temperature > 0:
            raise ValueError(f"initial_temperature must be positive, got {self.initial_temperature}")
        if not 0.0 < self.cooling_rate < 1.0:
            raise ValueError(f"cooling_rate must be in (0, 1), got {self.cooling_rate}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            "initial_temperature": self.initial_temperature,
            "cooling_rate": self.cooling_rate,
            "max_iterations": self.max_iterations,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SaConfig":
        """Create from dictionary loaded from JSON."""
        return cls(
            initial_temperature=data.get("initial_temperature", 1.0),
            cooling_rate=data.get("cooling_rate", 0.95),
            max_iterations=data.get("max_iterations", 30),
            seed=data.get("seed", 0),
        )


@dataclass(frozen=True)
class SaStep:
    """One iteration of the annealing loop.

    ``draw`` is the uniform number compared against exp(delta / temperature);
    it is None when the candidate improved and no draw was needed.
    """

    iteration: int
    candidate: HyperParams
    fitness: float
    delta: float
    temperature: float
    draw: Optional[float]
    accepted: bool
    new_best: bool
    best_fitness: float

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            "iteration": self.iteration,
            **self.candidate.to_dict(),
            "fitness": self.fitness,
            "delta": self.delta,
            "temperature": self.temperature,
            "draw": self.draw,
            "accepted": self.accepted,
            "new_best": self.new_best,
            "best_fitness": self.best_fitness,
        }


@dataclass
class SaTrace:
    steps: list[SaStep] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def to_records(self) -> list[dict]:
        return [step.to_dict() for step in self.steps]


@dataclass(frozen=True)
class SaResult:
    best: HyperParams
    best_fitness: float
    trace: SaTrace
    initial: HyperParams
    initial_fitness: float

    def summary(self) -> dict:
        return {"best": self.best.to_dict(), "fitness": self.best_fitness}


def random_initial(rng: np.random.Generator) -> HyperParams:
    """Uniform n_estimators in [50, 150]; depth uniform over {5..20, None}."""
    n_estimators = int(rng.integers(MIN_ESTIMATORS, MAX_ESTIMATORS + 1))
    depth = DEPTH_CHOICES[int(rng.integers(len(DEPTH_CHOICES)))]
    return HyperParams(n_estimators, depth)


def perturb_estimators(params: HyperParams, step: int) -> HyperParams:
    n_estimators = min(MAX_ESTIMATORS, max(MIN_ESTIMATORS, params.n_estimators + step))
    return HyperParams(n_estimators, params.max_depth)


def perturb_depth(params: HyperParams, step: int) -> HyperParams:
    """Move a bounded depth by ``step``; going past the maximum means unbounded.

    For an unbounded depth a positive step stays unbounded and any other
    step returns to the deepest bounded setting.
    """
    if params.max_depth is None:
        depth = None if step > 0 else MAX_DEPTH
    else:
        depth = params.max_depth + step
        if depth > MAX_DEPTH:
            depth = None
        elif depth < MIN_DEPTH:
            depth = MIN_DEPTH
    return HyperParams(params.n_estimators, depth)


def neighbor(current: HyperParams, rng: np.random.Generator) -> HyperParams:
    """Perturb one of the two hyperparameters, each with probability 1/2."""
    if rng.random() < 0.5:
        step = ESTIMATOR_STEPS[int(rng.integers(len(ESTIMATOR_STEPS)))]
        return perturb_estimators(current, step)
    if current.max_depth is None:
        return perturb_depth(current, 1 if rng.random() < 0.5 else -1)
    return perturb_depth(current, DEPTH_STEPS[int(rng.integers(len(DEPTH_STEPS)))])


def complexity(params: HyperParams) -> tuple[int, int]:
    """Ordering key: fewer trees first, then shallower trees."""
    depth = UNBOUNDED_DEPTH_RANK if params.max_depth is None else params.max_depth
    return params.n_estimators, depth


def fitness_seed(params: HyperParams, base_seed: int) -> int:
    """Seed that depends only on the base seed and the hyperparameters."""
    depth = 0 if params.max_depth is None else params.max_depth
    sequence = np.random.SeedSequence([base_seed, params.n_estimators, depth])
    return int(sequence.generate_state(1)[0])


def fitness_of(
    params: HyperParams,
    train: Dataset,
    validation: Dataset,
    probabilities: np.ndarray,
    base_seed: int,
    *,
    features_per_tree: Optional[int] = None,
    n_jobs: int = 1,
) -> float:
    """Composite fitness of a forest trained with ``params`` on ``train``."""
    config = FigrfConfig(
        n_estimators=params.n_estimators,
        max_depth=params.max_depth,
        probabilities=probabilities,
        features_per_tree=features_per_tree,
        seed=fitness_seed(params, base_seed),
        n_jobs=n_jobs,
    )
    model = fit_figrf(train, config)
    return evaluate(model.predict(validation.features), validation.labels).fitness


def search(objective: Callable[[HyperParams], float], config: SaConfig) -> SaResult:
    """Anneal over the hyperparameter box, maximising ``objective``.

    The initial configuration is evaluated first and becomes both the
    current and the best state. Only accepted candidates can replace the
    best one.
    """
    rng = np.random.default_rng(config.seed)
    current = random_initial(rng)
    current_fitness = objective(current)
    initial, initial_fitness = current, current_fitness
    best, best_fitness = current, current_fitness
    temperature = config.initial_temperature
    trace = SaTrace()

    for iteration in range(config.max_iterations):
        candidate = neighbor(current, rng)
        fitness = objective(candidate)
        delta = fitness - current_fitness

        draw = None
        if delta > 0:
            accepted = True
        else:
            draw = float(rng.random())
            accepted = draw < math.exp(delta / temperature)

        new_best = False
        if accepted:
            current, current_fitness = candidate, fitness
            if fitness > best_fitness or (
                fitness == best_fitness and complexity(candidate) < complexity(best)
            ):
                best, best_fitness = candidate, fitness
                new_best = True

        trace.steps.append(
            SaStep(
                iteration=iteration,
                candidate=candidate,
                fitness=fitness,
                delta=delta,
                temperature=temperature,
                draw=draw,
                accepted=accepted,
                new_best=new_best,
                best_fitness=best_fitness,
            )
        )
        logger.debug(
            f"SA {iteration}: {candidate.n_estimators}/{candidate.max_depth} "
            f"F={fitness:.4f} dF={delta:+.4f} T={temperature:.4g} accepted={accepted}"
        )
        temperature = config.initial_temperature * config.cooling_rate ** (iteration + 1)

    return SaResult(
        best=best,
        best_fitness=best_fitness,
        trace=trace,
        initial=initial,
        initial_fitness=initial_fitness,
    )


def anneal(
    train: Dataset,
    validation: Dataset,
    probabilities: np.ndarray,
    config: SaConfig,
    *,
    features_per_tree: Optional[int] = None,
    n_jobs: int = 1,
) -> SaResult:
    """Tune a FIGRF on ``train`` against ``validation``.

    Fitness is deterministic per configuration, so repeated candidates are
    looked up instead of retrained.
    """
    memo: dict[HyperParams, float] = {}

    def objective(params: HyperParams) -> float:
        if params not in memo:
            memo[params] = fitness_of(
                params,
                train,
                validation,
                probabilities,
                config.seed,
                features_per_tree=features_per_tree,
                n_jobs=n_jobs,
            )
        return memo[params]

    result = search(objective, config)
    logger.info(
        f"SA best: n_estimators={result.best.n_estimators}, max_depth={result.best.max_depth}, "
        f"fitness={result.best_fitness:.4f} ({len(memo)} configurations trained)"
    )
    return result

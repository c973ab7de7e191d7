"""Round orchestration and server-side math for min-max federated training.

One round of the agnostic algorithm:

1. sample clients uniformly without replacement,
2. gather per-domain counts and summed losses (evaluated at the current
   parameters, before training) through secure aggregation,
3. build the scaling vector alpha_i = lambda_i / N_i (zero when N_i = 0),
   where N comes either from this round's exact counts (two-phase-exact)
   or from a sliding-window average of previous rounds (windowed),
4. run the scaled local SGD on every selected client,
5. aggregate parameters weighted by each client's beta,
6. ascend the domain weights lambda on the observed per-domain average
   losses, by exponentiated gradient or by projected gradient.

The FedAvg baseline is the same machinery with alpha fixed to all-ones
(so beta_k = n_k) and lambda frozen; it pays no per-domain statistics
communication cost.

A round with no positive client weight is degenerate: parameters and
lambda stay put, the report is flagged, and the simulation continues.
In windowed mode round 1 is always degenerate (empty window => alpha = 0);
it exists to seed the window with counts.

``ServerState`` is an immutable snapshot; ``run_round`` returns a new one.
Client updates are pure and could run concurrently, but every reduction
happens on the orchestration thread in ascending client id order so
floating-point sums stay deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Literal, Sequence

import numpy as np

from .client import ClientUpdateResult, LocalSGDConfig, client_update, compute_client_stats
from .core import (
    ClientDataset,
    DomainStats,
    InvalidArgument,
    NumericError,
    as_param_vector,
    derive_seed,
    make_rng,
    mixture_uniform,
    validate_mixture,
)
from .models import ModelSpec
from .secagg import DEFAULT_SCALE_BITS, PairwiseSeeds, SecureSum

Algorithm = Literal["fedavg", "afa"]
LambdaUpdate = Literal["eg", "projected-sgd"]
ScalingMode = Literal["two-phase-exact", "windowed"]

# Stream tags for deriving independent per-round randomness.
_TAG_SAMPLING = 1
_TAG_STATS_MASK = 2
_TAG_PARAMS_MASK = 3


class DegenerateRound(RuntimeError):
    """Signal that a round has no positive aggregation weight."""


@dataclass(frozen=True)
class AggregationSettings:
    """Which round messages go through the masking simulation.

    Statistics are masked by default; parameter aggregation is plain
    unless ``mask_params`` is set (masking quantizes to the fixed-point
    grid, which costs up to n/(2*scale) absolute error per coordinate).
    """

    mask_stats: bool = True
    mask_params: bool = False
    scale_bits: int = DEFAULT_SCALE_BITS


@dataclass(frozen=True)
class AlgorithmConfig:
    """Algorithm selection plus all per-round hyperparameters."""

    algorithm: Algorithm = "afa"
    lambda_update: LambdaUpdate = "eg"
    scaling_mode: ScalingMode = "two-phase-exact"
    clients_per_round: int = 10
    rounds: int = 100
    lambda_lr: float = 0.01
    window_len: int = 10
    local: LocalSGDConfig = field(default_factory=lambda: LocalSGDConfig(1, 32, 0.1))

    def __post_init__(self):
        if self.algorithm not in ("fedavg", "afa"):
            raise InvalidArgument(f"unknown algorithm {self.algorithm!r}")
        if self.lambda_update not in ("eg", "projected-sgd"):
            raise InvalidArgument(f"unknown lambda update {self.lambda_update!r}")
        if self.scaling_mode not in ("two-phase-exact", "windowed"):
            raise InvalidArgument(f"unknown scaling mode {self.scaling_mode!r}")
        if self.clients_per_round < 1:
            raise InvalidArgument("clients_per_round must be >= 1")
        if self.rounds < 0:
            raise InvalidArgument("rounds must be >= 0")
        if not self.lambda_lr > 0:
            raise InvalidArgument("lambda_lr must be > 0")
        if self.window_len < 1:
            raise InvalidArgument("window_len must be >= 1")


@dataclass(frozen=True)
class ServerState:
    """Server snapshot after ``round`` completed rounds."""

    round: int
    w: np.ndarray
    lam: np.ndarray
    window: tuple[np.ndarray, ...]
    comm_params_total: int

    def __post_init__(self):
        object.__setattr__(self, "w", as_param_vector(self.w))
        object.__setattr__(self, "lam", validate_mixture(self.lam))
        object.__setattr__(self, "window", tuple(self.window))


@dataclass(frozen=True)
class RoundReport:
    """Per-round metrics record emitted by the orchestration loop."""

    round: int
    per_domain_loss: tuple[float, ...]
    lam: tuple[float, ...]
    worst_domain_loss: float
    model_summary: tuple[float, ...]
    comm_params_cumulative: int
    degenerate: bool


def initial_state(w0: np.ndarray, p: int) -> ServerState:
    """Fresh state: given parameters, uniform lambda, empty window."""
    return ServerState(0, w0, mixture_uniform(p), (), 0)


def compute_scaling(lam: np.ndarray, effective_counts: np.ndarray) -> np.ndarray:
    """alpha_i = lambda_i / N_i, with alpha_i = 0 wherever N_i = 0."""
    lam = validate_mixture(lam)
    counts = np.asarray(effective_counts, dtype=np.float64)
    if counts.shape != lam.shape:
        raise InvalidArgument("lambda and counts differ in length")
    if np.any(counts < 0):
        raise InvalidArgument("effective counts must be >= 0")
    alpha = np.zeros_like(lam)
    populated = counts > 0
    alpha[populated] = lam[populated] / counts[populated]
    return alpha


def effective_counts(
    state: ServerState,
    mode: ScalingMode,
    exact_counts: np.ndarray | None = None,
) -> np.ndarray:
    """Domain counts feeding the scaling vector, per scaling mode.

    Two-phase-exact passes this round's gathered counts through; windowed
    averages the window of previous rounds (all zeros when empty, which
    makes round 1 a pure stats-gathering round).
    """
    if mode == "two-phase-exact":
        if exact_counts is None:
            raise InvalidArgument("two-phase-exact mode requires this round's counts")
        return np.asarray(exact_counts, dtype=np.float64)
    if mode == "windowed":
        if exact_counts is not None:
            raise InvalidArgument("windowed mode ignores exact counts; do not pass them")
        if not state.window:
            return np.zeros(state.lam.shape[0])
        return np.stack(state.window).astype(np.float64).mean(axis=0)
    raise InvalidArgument(f"unknown scaling mode {mode!r}")


def aggregate_params(results: Sequence[ClientUpdateResult]) -> np.ndarray:
    """Beta-weighted mean of client parameters, reduced in list order.

    Callers pass results in ascending client id order. Raises
    ``DegenerateRound`` when no client carries positive weight.
    """
    total_beta = 0.0
    acc: np.ndarray | None = None
    for r in results:
        if r.beta == 0.0:
            continue
        contrib = r.beta * r.new_params
        acc = contrib if acc is None else acc + contrib
        total_beta += r.beta
    if acc is None or total_beta <= 0.0:
        raise DegenerateRound("no client carried positive aggregation weight")
    return acc / total_beta


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-threshold)."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise InvalidArgument("projection expects a non-empty 1-D vector")
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    j = np.arange(1, v.size + 1)
    rho = int(np.nonzero(u + (1.0 - css) / j > 0)[0][-1])
    theta = (css[rho] - 1.0) / (rho + 1)
    return np.maximum(v - theta, 0.0)


def lambda_update_eg(lam: np.ndarray, domain_losses: np.ndarray, lr: float) -> np.ndarray:
    """Exponentiated-gradient ascent step on the domain weights.

    Losses are shifted by their max before exponentiation; the shift
    cancels in the normalization, so the update is invariant to adding a
    constant to every loss and cannot overflow for lr > 0.
    """
    lam = validate_mixture(lam)
    losses = np.asarray(domain_losses, dtype=np.float64)
    if losses.shape != lam.shape:
        raise InvalidArgument("lambda and losses differ in length")
    if not np.all(np.isfinite(losses)):
        raise NumericError("domain losses contain NaN or Inf")
    shifted = losses - losses.max()
    weights = lam * np.exp(lr * shifted)
    total = float(weights.sum())
    if not np.isfinite(total) or total <= 0.0:
        raise NumericError("exponentiated-gradient weights vanished or overflowed")
    return weights / total


def lambda_update_projected_sgd(
    lam: np.ndarray, domain_losses: np.ndarray, lr: float
) -> np.ndarray:
    """Additive ascent step followed by Euclidean projection onto the simplex."""
    lam = validate_mixture(lam)
    losses = np.asarray(domain_losses, dtype=np.float64)
    if losses.shape != lam.shape:
        raise InvalidArgument("lambda and losses differ in length")
    if not np.all(np.isfinite(losses)):
        raise NumericError("domain losses contain NaN or Inf")
    return project_simplex(lam + lr * losses)


def comm_cost_per_round(algorithm: Algorithm, clients_per_round: int,
                        param_count: int, p: int) -> int:
    """Parameters on the wire per round: 2c|W| plus 4cp for the agnostic run."""
    base = 2 * clients_per_round * param_count
    if algorithm == "fedavg":
        return base
    if algorithm == "afa":
        return base + 4 * clients_per_round * p
    raise InvalidArgument(f"unknown algorithm {algorithm!r}")


def _gather_stats(
    clients: Sequence[ClientDataset],
    spec: ModelSpec,
    w: np.ndarray,
    p: int,
    settings: AggregationSettings,
    mask_rng: np.random.Generator,
) -> DomainStats:
    """Cohort-total DomainStats; the per-client vectors never leave here.

    With masking on, each client's (counts, loss sums) vector is fed into
    a ``SecureSum``; the orchestration side only ever reads the aggregate.
    Counts are integers, so they survive the fixed-point wire bit-exactly.
    """
    if settings.mask_stats:
        seeds = PairwiseSeeds.generate(len(clients), mask_rng)
        collector = SecureSum(seeds, 2 * p, scale_bits=settings.scale_bits)
        for rank, c in enumerate(clients):
            stats = compute_client_stats(spec, w, c, p)
            collector.submit(rank, np.concatenate([stats.counts.astype(np.float64),
                                                   stats.loss_sums]))
        total = collector.aggregate()
    else:
        total = np.zeros(2 * p)
        for c in clients:
            stats = compute_client_stats(spec, w, c, p)
            total = total + np.concatenate([stats.counts.astype(np.float64),
                                            stats.loss_sums])
    counts = np.rint(total[:p]).astype(np.int64)
    loss_sums = total[p:].copy()
    loss_sums[counts == 0] = 0.0
    return DomainStats(counts, loss_sums)


def _execute_round(
    state: ServerState,
    cfg: AlgorithmConfig,
    spec: ModelSpec,
    population: Sequence[ClientDataset],
    seed: int,
    *,
    fedavg: bool,
    settings: AggregationSettings,
    summary_fn: Callable[[np.ndarray], tuple[float, ...]] | None,
) -> tuple[ServerState, RoundReport]:
    p = state.lam.shape[0]
    if len(population) < cfg.clients_per_round:
        raise InvalidArgument(
            f"population of {len(population)} cannot supply {cfg.clients_per_round} clients"
        )
    t = state.round + 1

    sample_rng = make_rng(seed, t, _TAG_SAMPLING)
    picked = sample_rng.choice(len(population), size=cfg.clients_per_round, replace=False)
    clients = sorted((population[i] for i in picked), key=lambda c: c.client_id)

    round_stats = _gather_stats(
        clients, spec, state.w, p, settings, make_rng(seed, t, _TAG_STATS_MASK)
    )

    if fedavg:
        alpha = np.ones(p)
    else:
        exact = round_stats.counts if cfg.scaling_mode == "two-phase-exact" else None
        alpha = compute_scaling(state.lam, effective_counts(state, cfg.scaling_mode, exact))

    results = [
        client_update(spec, state.w, alpha, c, cfg.local, derive_seed(seed, t, c.client_id))
        for c in clients
    ]

    degenerate = False
    if settings.mask_params:
        seeds = PairwiseSeeds.generate(len(clients), make_rng(seed, t, _TAG_PARAMS_MASK))
        collector = SecureSum(seeds, spec.param_count + 1, scale_bits=settings.scale_bits)
        for rank, r in enumerate(results):
            collector.submit(rank, np.concatenate([r.beta * r.new_params, [r.beta]]))
        total = collector.aggregate()
        if total[-1] <= 0.0:
            degenerate, new_w = True, state.w
        else:
            new_w = total[:-1] / total[-1]
    else:
        try:
            new_w = aggregate_params(results)
        except DegenerateRound:
            degenerate, new_w = True, state.w

    per_domain_loss = np.zeros(p)
    populated = round_stats.counts > 0
    per_domain_loss[populated] = (
        round_stats.loss_sums[populated] / round_stats.counts[populated]
    )

    if fedavg or degenerate:
        new_lam = state.lam
    elif cfg.lambda_update == "eg":
        new_lam = lambda_update_eg(state.lam, per_domain_loss, cfg.lambda_lr)
    else:
        new_lam = lambda_update_projected_sgd(state.lam, per_domain_loss, cfg.lambda_lr)

    window = (state.window + (round_stats.counts,))[-cfg.window_len:]
    comm = state.comm_params_total + comm_cost_per_round(
        "fedavg" if fedavg else "afa", cfg.clients_per_round, spec.param_count, p
    )

    new_state = ServerState(t, new_w, new_lam, window, comm)
    report = RoundReport(
        round=t,
        per_domain_loss=tuple(float(v) for v in per_domain_loss),
        lam=tuple(float(v) for v in new_lam),
        worst_domain_loss=float(per_domain_loss[populated].max()) if populated.any() else 0.0,
        model_summary=summary_fn(new_w) if summary_fn is not None else (),
        comm_params_cumulative=comm,
        degenerate=degenerate,
    )
    return new_state, report


def run_round(
    state: ServerState,
    cfg: AlgorithmConfig,
    spec: ModelSpec,
    population: Sequence[ClientDataset],
    seed: int,
    *,
    settings: AggregationSettings = AggregationSettings(),
    summary_fn: Callable[[np.ndarray], tuple[float, ...]] | None = None,
) -> tuple[ServerState, RoundReport]:
    """One round of the configured algorithm; returns the next state."""
    if cfg.algorithm == "fedavg":
        return run_fedavg_round(
            state, cfg, spec, population, seed, settings=settings, summary_fn=summary_fn
        )
    return _execute_round(
        state, cfg, spec, population, seed,
        fedavg=False, settings=settings, summary_fn=summary_fn,
    )


def run_fedavg_round(
    state: ServerState,
    cfg: AlgorithmConfig,
    spec: ModelSpec,
    population: Sequence[ClientDataset],
    seed: int,
    *,
    settings: AggregationSettings = AggregationSettings(),
    summary_fn: Callable[[np.ndarray], tuple[float, ...]] | None = None,
) -> tuple[ServerState, RoundReport]:
    """Baseline round: all-ones scaling (beta_k = n_k), lambda frozen."""
    return _execute_round(
        state, cfg, spec, population, seed,
        fedavg=True, settings=settings, summary_fn=summary_fn,
    )

"""Task and dataset generators.

Two desk-scale tasks:

- ``toy-regression``: p clusters of points on the real line around fixed
  centers. The min-max optimum over domains is the midpoint of the
  extreme centers, which doubles as an analytic oracle. Every domain
  uses the *same* deterministic symmetric offsets around its center, so
  all domains have identical sample variance; that keeps the argmin of
  the worst per-sample squared loss equal to the argmin of the worst
  center distance, which is what the oracle describes.

- ``synthetic-classification``: p Gaussian-mixture domains over R^d for
  a binary logistic model. Each domain separates its two classes along
  its own direction with its own margin, so a deliberately harder
  minority domain (smaller margin, fewer clients) genuinely conflicts
  with the majority domain instead of merely being noisier.

Both support the two partition schemes: ``client-partition`` (every
client's samples share one domain) and ``data-partition`` (clients mix
domains). Generation is a pure function of the config seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from .core import ClientDataset, InvalidArgument, Sample, make_rng
from .models import ModelSpec

TaskKind = Literal["toy-regression", "synthetic-classification"]
Partition = Literal["client-partition", "data-partition"]

_TAG_TOY = 11
_TAG_CLASSIFICATION = 12


@dataclass(frozen=True)
class TaskConfig:
    """Everything needed to regenerate a task's population from a seed."""

    kind: TaskKind
    p: int
    num_clients: int
    seed: int
    partition: Partition
    samples_per_client: int | tuple[int, int] = 20
    # toy-regression knobs
    centers: tuple[float, ...] = (-2.0, -1.0, 0.0, 1.0, 2.0)
    points_per_domain: int = 100
    spread: float = 0.5
    init_value: float = 1.5
    # synthetic-classification knobs
    margins: tuple[float, ...] = (2.0, 0.5)
    shares: tuple[float, ...] = (0.85, 0.15)
    mixing: tuple[float, ...] | None = None
    noise: float = 0.5
    input_dim: int = 2
    num_classes: int = 2

    def __post_init__(self):
        if self.kind not in ("toy-regression", "synthetic-classification"):
            raise InvalidArgument(f"unknown task kind {self.kind!r}")
        if self.partition not in ("client-partition", "data-partition"):
            raise InvalidArgument(f"unknown partition {self.partition!r}")
        if self.p < 1:
            raise InvalidArgument("p must be >= 1")
        if self.num_clients < 1:
            raise InvalidArgument("num_clients must be >= 1")
        if isinstance(self.samples_per_client, tuple):
            lo, hi = self.samples_per_client
            if lo < 1 or hi < lo:
                raise InvalidArgument("samples_per_client range must satisfy 1 <= lo <= hi")
        elif self.samples_per_client < 1:
            raise InvalidArgument("samples_per_client must be >= 1")

        if self.kind == "toy-regression":
            if len(self.centers) != self.p:
                raise InvalidArgument(
                    f"need {self.p} centers, got {len(self.centers)}"
                )
            if self.points_per_domain < 1:
                raise InvalidArgument("points_per_domain must be >= 1")
            if self.spread < 0:
                raise InvalidArgument("spread must be >= 0")
            if self.p * self.points_per_domain < self.num_clients:
                raise InvalidArgument("fewer points than clients; some client would be empty")
            if self.partition == "client-partition" and self.num_clients < self.p:
                raise InvalidArgument("client partition needs at least one client per domain")
        else:
            if self.num_classes != 2:
                raise InvalidArgument("classification generator is binary (num_classes=2)")
            if self.input_dim < 2:
                raise InvalidArgument("classification needs input_dim >= 2")
            if len(self.margins) != self.p:
                raise InvalidArgument(f"need {self.p} margins, got {len(self.margins)}")
            if self.partition == "client-partition":
                if len(self.shares) != self.p:
                    raise InvalidArgument(f"need {self.p} shares, got {len(self.shares)}")
                if any(s <= 0 for s in self.shares):
                    raise InvalidArgument("client shares must be > 0")
                if self.num_clients < self.p:
                    raise InvalidArgument("client partition needs at least one client per domain")
            if self.mixing is not None:
                if self.partition != "data-partition":
                    raise InvalidArgument("mixing only applies to the data partition")
                if len(self.mixing) != self.p:
                    raise InvalidArgument(f"need {self.p} mixing weights, got {len(self.mixing)}")
                if any(m < 0 for m in self.mixing) or abs(sum(self.mixing) - 1.0) > 1e-9:
                    raise InvalidArgument("mixing weights must be a distribution")


def model_spec_for(cfg: TaskConfig) -> ModelSpec:
    """Hypothesis class matching the task."""
    if cfg.kind == "toy-regression":
        return ModelSpec("scalar-regression")
    return ModelSpec("logistic", input_dim=cfg.input_dim, num_classes=cfg.num_classes)


def initial_params_for(cfg: TaskConfig) -> np.ndarray:
    """Starting parameters: the toy's configured scalar, zeros otherwise."""
    if cfg.kind == "toy-regression":
        return np.array([cfg.init_value])
    return np.zeros(model_spec_for(cfg).param_count)


def _client_sizes(cfg: TaskConfig, rng: np.random.Generator, n_clients: int) -> list[int]:
    if isinstance(cfg.samples_per_client, tuple):
        lo, hi = cfg.samples_per_client
        return [int(rng.integers(lo, hi + 1)) for _ in range(n_clients)]
    return [cfg.samples_per_client] * n_clients


def _split_counts(total: int, weights: Sequence[float]) -> list[int]:
    """Largest-remainder allocation of ``total`` slots, each part >= 1."""
    weights = np.asarray(weights, dtype=np.float64)
    quotas = weights / weights.sum() * total
    counts = np.floor(quotas).astype(int)
    counts = np.maximum(counts, 1)
    while counts.sum() > total:
        counts[int(np.argmax(counts))] -= 1
    remainder = quotas - np.floor(quotas)
    while counts.sum() < total:
        order = np.argsort(-remainder)
        counts[order[0]] += 1
        remainder[order[0]] = -1.0
    return [int(c) for c in counts]


def gen_toy_regression(cfg: TaskConfig) -> tuple[list[ClientDataset], float]:
    """Toy 1-D population plus the analytic min-max oracle.

    Domain i holds ``points_per_domain`` points ``centers[i] + offsets``
    with offsets shared by all domains. Points are dealt to clients after
    a seeded shuffle, so every client is non-empty and the assignment is
    random but reproducible.
    """
    if cfg.kind != "toy-regression":
        raise InvalidArgument("config is not a toy-regression task")
    rng = make_rng(cfg.seed, _TAG_TOY)
    offsets = np.linspace(-cfg.spread, cfg.spread, cfg.points_per_domain)
    if cfg.points_per_domain == 1:
        offsets = np.zeros(1)

    pool: list[Sample] = []
    for i, center in enumerate(cfg.centers):
        for x in center + offsets:
            pool.append(Sample(np.array([x]), float(x), i))

    clients: list[ClientDataset] = []
    if cfg.partition == "data-partition":
        order = rng.permutation(len(pool))
        for cid in range(cfg.num_clients):
            picks = order[cid::cfg.num_clients]
            clients.append(ClientDataset(cid, tuple(pool[k] for k in picks)))
    else:
        per_domain = _split_counts(cfg.num_clients, [1.0] * cfg.p)
        cid = 0
        for i in range(cfg.p):
            points = [s for s in pool if s.domain == i]
            if len(points) < per_domain[i]:
                raise InvalidArgument(
                    f"domain {i} has {len(points)} points for {per_domain[i]} clients"
                )
            order = rng.permutation(len(points))
            for local in range(per_domain[i]):
                picks = order[local::per_domain[i]]
                clients.append(ClientDataset(cid, tuple(points[k] for k in picks)))
                cid += 1

    oracle = (min(cfg.centers) + max(cfg.centers)) / 2.0
    return clients, oracle


def _domain_directions(p: int, input_dim: int) -> np.ndarray:
    """Per-domain unit separation directions, spread over a half-circle."""
    angles = np.pi * np.arange(p) / max(p, 1)
    dirs = np.zeros((p, input_dim))
    dirs[:, 0] = np.cos(angles)
    dirs[:, 1] = np.sin(angles)
    return dirs


def _draw_class_sample(
    rng: np.random.Generator,
    domain: int,
    directions: np.ndarray,
    margins: Sequence[float],
    noise: float,
    input_dim: int,
) -> Sample:
    label = int(rng.integers(0, 2))
    mean = (2 * label - 1) * (margins[domain] / 2.0) * directions[domain]
    x = mean + noise * rng.standard_normal(input_dim)
    return Sample(x, float(label), domain)


def gen_synthetic_classification(cfg: TaskConfig) -> list[ClientDataset]:
    """Gaussian-mixture classification population over p domains.

    With ``client-partition`` the client population is split by
    ``shares`` (the minority domain gets fewer clients); with
    ``data-partition`` every sample's domain is drawn from ``mixing``
    (uniform when unset).
    """
    if cfg.kind != "synthetic-classification":
        raise InvalidArgument("config is not a synthetic-classification task")
    rng = make_rng(cfg.seed, _TAG_CLASSIFICATION)
    directions = _domain_directions(cfg.p, cfg.input_dim)
    sizes = _client_sizes(cfg, rng, cfg.num_clients)

    clients: list[ClientDataset] = []
    if cfg.partition == "client-partition":
        per_domain = _split_counts(cfg.num_clients, cfg.shares)
        domain_of_client = [i for i, n in enumerate(per_domain) for _ in range(n)]
        for cid in range(cfg.num_clients):
            dom = domain_of_client[cid]
            samples = tuple(
                _draw_class_sample(rng, dom, directions, cfg.margins, cfg.noise, cfg.input_dim)
                for _ in range(sizes[cid])
            )
            clients.append(ClientDataset(cid, samples))
    else:
        mixing = np.asarray(
            cfg.mixing if cfg.mixing is not None else [1.0 / cfg.p] * cfg.p
        )
        for cid in range(cfg.num_clients):
            samples = tuple(
                _draw_class_sample(
                    rng, int(rng.choice(cfg.p, p=mixing)), directions,
                    cfg.margins, cfg.noise, cfg.input_dim,
                )
                for _ in range(sizes[cid])
            )
            clients.append(ClientDataset(cid, samples))
    return clients


def generate_population(cfg: TaskConfig) -> tuple[list[ClientDataset], float | None]:
    """Dispatch to the task's generator; oracle is None unless the task has one."""
    if cfg.kind == "toy-regression":
        return gen_toy_regression(cfg)
    return gen_synthetic_classification(cfg), None


def write_datasets(clients: Sequence[ClientDataset], path: str | Path) -> None:
    """Line-oriented text dump: per sample ``domain label features...``.

    Clients are delimited by ``# client <id>`` header lines so the file
    round-trips back into ClientDatasets.
    """
    path = Path(path)
    lines: list[str] = []
    for c in clients:
        lines.append(f"# client {c.client_id}")
        for s in c.samples:
            feats = " ".join(f"{v:.17g}" for v in s.features)
            lines.append(f"{s.domain} {s.label:.17g} {feats}")
    path.write_text("\n".join(lines) + "\n")


def read_datasets(path: str | Path) -> list[ClientDataset]:
    """Parse a file written by ``write_datasets``."""
    clients: list[ClientDataset] = []
    current_id: int | None = None
    current: list[Sample] = []

    def flush():
        if current_id is not None:
            clients.append(ClientDataset(current_id, tuple(current)))

    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("# client"):
            flush()
            current_id = int(line.split()[-1])
            current = []
            continue
        parts = line.split()
        if current_id is None or len(parts) < 3:
            raise InvalidArgument(f"malformed dataset line: {raw!r}")
        domain, label = int(parts[0]), float(parts[1])
        features = np.array([float(v) for v in parts[2:]])
        current.append(Sample(features, label, domain))
    flush()
    return clients

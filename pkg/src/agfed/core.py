"""Shared value types for the federated min-max simulator.

Samples, client datasets, mixture weights over domains, scaling vectors,
and the per-domain count/loss statistics exchanged each round. Everything
here is an immutable value: dataclasses are frozen and numpy arrays are
made read-only, so instances can be shared freely across threads.

Conventions used throughout the package:

- vectors are 1-D float64 (or int64 for counts) numpy arrays,
- domains are dense integer indices ``0..p-1``,
- mixture weights live on the probability simplex (entries >= 0,
  sum within ``SIMPLEX_ATOL`` of 1).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

# Absolute tolerance for the simplex sum-to-one invariant.
SIMPLEX_ATOL = 1e-12


class InvalidArgument(ValueError):
    """Raised when an operation receives structurally invalid input."""


class NumericError(ArithmeticError):
    """Raised when a numeric invariant is violated (NaN/Inf, underflow)."""


def as_vector(values, dtype=np.float64, *, name: str = "vector") -> np.ndarray:
    """Coerce to a read-only 1-D array of the given dtype."""
    arr = np.array(values, dtype=dtype)
    if arr.ndim != 1:
        raise InvalidArgument(f"{name} must be 1-D, got shape {arr.shape}")
    arr.flags.writeable = False
    return arr


def as_param_vector(values) -> np.ndarray:
    """Coerce to a parameter vector, rejecting non-finite entries."""
    arr = as_vector(values, name="parameter vector")
    if not np.all(np.isfinite(arr)):
        raise NumericError("parameter vector contains NaN or Inf")
    return arr


@dataclass(frozen=True)
class Sample:
    """One labelled example with its domain tag.

    ``label`` is a real target for regression or a class index for
    classification. ``domain`` indexes into ``0..p-1`` of the enclosing
    task.
    """

    features: np.ndarray
    label: float
    domain: int

    def __post_init__(self):
        object.__setattr__(self, "features", as_vector(self.features, name="features"))
        if self.domain < 0:
            raise InvalidArgument(f"domain index must be >= 0, got {self.domain}")


@dataclass(frozen=True)
class ClientDataset:
    """A client's ordered, non-empty list of samples.

    Sample order is fixed at generation time; all deterministic shuffles
    and sums key off this order.
    """

    client_id: int
    samples: tuple[Sample, ...]

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        if not self.samples:
            raise InvalidArgument(f"client {self.client_id} has no samples")
        dims = {s.features.shape[0] for s in self.samples}
        if len(dims) != 1:
            raise InvalidArgument(
                f"client {self.client_id} mixes feature dimensions {sorted(dims)}"
            )

    def __len__(self) -> int:
        return len(self.samples)

    @cached_property
    def feature_matrix(self) -> np.ndarray:
        x = np.stack([s.features for s in self.samples]).astype(np.float64)
        x.flags.writeable = False
        return x

    @cached_property
    def labels(self) -> np.ndarray:
        return as_vector([s.label for s in self.samples], name="labels")

    @cached_property
    def domains(self) -> np.ndarray:
        return as_vector([s.domain for s in self.samples], dtype=np.int64, name="domains")

    def domain_counts(self, p: int) -> np.ndarray:
        """Number of samples per domain, length ``p``."""
        if int(self.domains.max()) >= p:
            raise InvalidArgument(
                f"client {self.client_id} has domain tag >= p={p}"
            )
        counts = np.bincount(self.domains, minlength=p).astype(np.int64)
        counts.flags.writeable = False
        return counts


def mixture_uniform(p: int) -> np.ndarray:
    """Uniform mixture weights 1/p over ``p`` domains."""
    if p < 1:
        raise InvalidArgument(f"need at least one domain, got p={p}")
    lam = np.full(p, 1.0 / p)
    lam.flags.writeable = False
    return lam


def validate_mixture(lam: np.ndarray) -> np.ndarray:
    """Check the simplex invariants; returns the validated vector."""
    lam = as_vector(lam, name="mixture weights")
    if lam.size == 0:
        raise InvalidArgument("mixture weights must be non-empty")
    if not np.all(np.isfinite(lam)):
        raise NumericError("mixture weights contain NaN or Inf")
    if np.any(lam < 0):
        raise InvalidArgument(f"mixture weights must be >= 0, got min {lam.min()}")
    total = float(lam.sum())
    if abs(total - 1.0) > SIMPLEX_ATOL:
        raise InvalidArgument(f"mixture weights must sum to 1, got {total!r}")
    return lam


def validate_scaling(alpha: np.ndarray, effective_counts: np.ndarray | None = None) -> np.ndarray:
    """Check scaling-vector invariants (non-negative; zero iff count zero)."""
    alpha = as_vector(alpha, name="scaling vector")
    if np.any(alpha < 0) or not np.all(np.isfinite(alpha)):
        raise InvalidArgument("scaling vector entries must be finite and >= 0")
    if effective_counts is not None:
        counts = np.asarray(effective_counts, dtype=np.float64)
        if counts.shape != alpha.shape:
            raise InvalidArgument("scaling vector and counts differ in length")
        mismatched = (alpha == 0.0) != (counts == 0.0)
        if np.any(mismatched):
            raise InvalidArgument("scaling entry is zero iff its domain count is zero")
    return alpha


@dataclass(frozen=True)
class DomainStats:
    """Per-domain sample counts and summed (not averaged) losses.

    ``loss_sums[i]`` holds the sum of per-sample losses over domain ``i``,
    i.e. count * average loss, so aggregation across clients is a plain
    element-wise sum.
    """

    counts: np.ndarray
    loss_sums: np.ndarray

    def __post_init__(self):
        counts = as_vector(self.counts, dtype=np.int64, name="counts")
        loss_sums = as_vector(self.loss_sums, name="loss_sums")
        if counts.shape != loss_sums.shape:
            raise InvalidArgument(
                f"counts ({counts.shape}) and loss_sums ({loss_sums.shape}) differ in length"
            )
        if np.any(counts < 0):
            raise InvalidArgument("counts must be non-negative")
        if not np.all(np.isfinite(loss_sums)):
            raise NumericError("loss sums contain NaN or Inf")
        if np.any((counts == 0) & (loss_sums != 0.0)):
            raise InvalidArgument("a domain with zero samples must have zero summed loss")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "loss_sums", loss_sums)

    @property
    def p(self) -> int:
        return self.counts.shape[0]

    @staticmethod
    def zeros(p: int) -> "DomainStats":
        if p < 1:
            raise InvalidArgument(f"need at least one domain, got p={p}")
        return DomainStats(np.zeros(p, dtype=np.int64), np.zeros(p))


def domain_stats_merge(a: DomainStats, b: DomainStats) -> DomainStats:
    """Element-wise sum of two stats vectors (associative, commutative)."""
    if a.p != b.p:
        raise InvalidArgument(f"cannot merge stats of length {a.p} and {b.p}")
    return DomainStats(a.counts + b.counts, a.loss_sums + b.loss_sums)


def derive_seed(*parts: int) -> int:
    """Stable 64-bit seed from integer parts, e.g. (seed, round, client_id).

    Keying per-client streams off (global seed, round, client id) makes
    results independent of client execution order.
    """
    ss = np.random.SeedSequence([int(part) & 0xFFFFFFFFFFFFFFFF for part in parts])
    return int(ss.generate_state(1, np.uint64)[0])


def make_rng(*parts: int) -> np.random.Generator:
    """Deterministic generator keyed by integer parts."""
    ss = np.random.SeedSequence([int(part) & 0xFFFFFFFFFFFFFFFF for part in parts])
    return np.random.Generator(np.random.PCG64(ss))

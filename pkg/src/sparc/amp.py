"""Approximate message passing decoder for power-allocated SPARCs."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .core import DecodeMetrics, MessageVector, SparcParams, compute_metrics
from .design import DesignOperator
from .errors import ConfigError, DivergenceError, InputSizeError


@dataclass(frozen=True)
class AmpConfig:
    """Decoder settings.

    tau_schedule: ``"online"`` uses ``||z^t||^2 / n``; ``"se"`` uses the
        supplied ``tau_sq`` sequence (indexed by iteration, last value reused).
    max_iters: iteration cap.
    stop_threshold: stop once ``|tau_t^2 - tau_{t-1}^2|`` falls below it.
        ``None`` means the smallest section power ``P_L``; ``0`` disables
        early termination (always run ``max_iters``).
    onsager: test hook; ``False`` drops the Onsager correction.
    """

    tau_schedule: str = "online"
    max_iters: int = 25
    stop_threshold: float | None = None
    tau_sq: Sequence[float] | None = None
    onsager: bool = True

    def __post_init__(self):
        if self.max_iters < 1:
            raise ConfigError("max_iters must be >= 1", "max_iters")
        if self.tau_schedule not in ("online", "se"):
            raise ConfigError("tau_schedule must be 'online' or 'se'", "tau_schedule")
        if self.tau_schedule == "se" and not self.tau_sq:
            raise ConfigError("tau_schedule='se' needs a tau_sq sequence", "tau_sq")


@dataclass
class AmpState:
    beta_est: np.ndarray
    residual: np.ndarray
    tau_sq_hat: float
    iteration: int


@dataclass
class AmpResult:
    message: MessageVector
    metrics: DecodeMetrics | None
    beta: np.ndarray                 # final soft estimate beta^T, shape (L, M)
    tau_sq_hat: list = field(default_factory=list)
    nmse: list = field(default_factory=list)   # ||beta - beta^t||^2 / (nP), t = 0, 1, ...
    iterations: int = 0

    # Tuple-style unpacking: (message, metrics, trajectory)
    def __iter__(self):
        return iter((self.message, self.metrics, self.tau_sq_hat))


def _alloc_values(alloc) -> np.ndarray:
    return np.asarray(getattr(alloc, "values", alloc), dtype=np.float64)


def eta_denoise(stat: np.ndarray, tau_sq: float, alloc, params: SparcParams | None = None,
                n: int | None = None) -> np.ndarray:
    """Section-wise posterior-mean estimate ``sqrt(nP_l) * softmax(stat sqrt(nP_l) / tau^2)``.

    ``stat`` may be flat (``L*M``) or ``(L, M)``; the output keeps its shape.
    """
    if not tau_sq > 0:
        raise ConfigError("tau_sq must be positive", "tau_sq")
    p = _alloc_values(alloc)
    n = params.n if params is not None else n
    s = np.asarray(stat, dtype=np.float64)
    s2 = np.ascontiguousarray(s.reshape(p.size, -1))
    c = np.sqrt(n * p)
    out = np.empty_like(s2)
    _kernels.section_softmax(s2, c / tau_sq, out)
    out *= c[:, None]
    return out.reshape(s.shape)


def harden(beta: np.ndarray) -> np.ndarray:
    """Per-section argmax; ``np.argmax`` returns the lowest index on ties."""
    return np.argmax(beta, axis=1)


def amp_decode(op: DesignOperator, y: np.ndarray, alloc, params: SparcParams, config: AmpConfig = AmpConfig(),
               truth: MessageVector | None = None) -> AmpResult:
    """Run AMP from ``beta^0 = 0``, ``z^{-1} = 0`` and harden by section argmax.

    When ``truth`` is given, per-iteration NMSE and decode metrics are recorded.
    """
    p = _alloc_values(alloc)
    n, L, M = op.n, op.L, op.M
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.size != n:
        raise InputSizeError(f"y must have length {n}")
    if p.size != L:
        raise InputSizeError("allocation length must equal L")
    P = p.sum()
    c = np.sqrt(n * p)
    thresh = config.stop_threshold
    if thresh is None:
        thresh = float(p.min())
    beta_true = truth.to_beta(c) if truth is not None else None

    beta = np.zeros((L, M))
    z_prev = np.zeros(n)
    tau_prev = 1.0
    taus: list[float] = []
    nmse: list[float] = []
    if beta_true is not None:
        nmse.append(float(np.sum(beta_true ** 2) / (n * P)) if P > 0 else 0.0)
    it = 0
    for t in range(config.max_iters):
        it = t + 1
        if t == 0:
            z = y.copy()
        else:
            z = y - op.apply(beta)
            if config.onsager:
                z += (z_prev / tau_prev) * (P - np.sum(beta * beta) / n)
        if config.tau_schedule == "online":
            tau = float(z @ z) / n
        else:
            seq = config.tau_sq
            tau = float(seq[min(t, len(seq) - 1)])
        if not np.isfinite(tau) or tau <= 0:
            raise DivergenceError("non-finite or non-positive tau^2", t)
        taus.append(tau)
        stat = op.adjoint(z)
        stat += beta
        beta = eta_denoise(stat, tau, p, n=n)
        if not np.all(np.isfinite(beta)):
            raise DivergenceError("non-finite estimate", t)
        if beta_true is not None:
            nmse.append(float(np.sum((beta - beta_true) ** 2) / (n * P)))
        if config.tau_schedule == "online" and t > 0 and thresh > 0 and abs(tau - taus[-2]) < thresh:
            break
        z_prev, tau_prev = z, tau
    msg = MessageVector(harden(beta), M)
    metrics = compute_metrics(truth, msg, iterations_used=it, tau_hat_trajectory=taus) if truth is not None else None
    return AmpResult(msg, metrics, beta, taus, nmse, it)


def rerun_unprotected(op: DesignOperator, y: np.ndarray, fixed, alloc, params: SparcParams,
                      config: AmpConfig = AmpConfig()) -> MessageVector:
    """Subtract the codeword of the fixed sections and re-decode the rest.

    ``fixed`` is either a length-``L`` sequence with ``-1`` marking free
    sections, or a shorter sequence (or :class:`MessageVector`) giving the
    indices of the last ``len(fixed)`` sections.  Fixed sections must form a
    contiguous suffix.
    """
    L, M = op.L, op.M
    f = np.asarray(getattr(fixed, "sections", fixed), dtype=np.int64).reshape(-1)
    if f.size > L:
        raise ConfigError("more fixed sections than L", "fixed")
    if f.size < L:
        f = np.concatenate([np.full(L - f.size, -1), f])
    free = f < 0
    Lu = int(free.sum())
    if free[Lu:].any() or not free[:Lu].all():
        raise ConfigError("fixed sections must form a contiguous suffix", "fixed")
    if np.any(f[Lu:] >= M):
        raise ConfigError("fixed section index out of range", "fixed")
    if Lu == 0:
        return MessageVector(f, M)
    p = _alloc_values(alloc)
    y = np.asarray(y, dtype=np.float64)
    if Lu < L:
        tail = op.restrict(Lu, L)
        y = y - tail.apply(MessageVector(f[Lu:], M).to_beta(np.sqrt(op.n * p[Lu:])))
    head = amp_decode(op.restrict(0, Lu), y, p[:Lu], params, config)
    return MessageVector(np.concatenate([head.message.sections, f[Lu:]]), M)

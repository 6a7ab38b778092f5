"""Scenario definitions: shared set-up, one Monte-Carlo trial, CSV layout.

Every trial draws its randomness from ``trial_stream(master_seed, trial_id)``
and shared objects (designs, SE curves) from ``SHARED`` streams of the master
seed, so a trial's row depends only on ``(config, master seed, trial id)``.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..amp import AmpConfig, amp_decode
from ..compress import CompressParams, build_design as build_compress_design, optimal_distortion, sc_encode, \
    reconstruct, distortion
from ..core import MessageVector, SparcParams, compute_metrics, nats_to_bits
from ..design import build, forward
from ..errors import ConfigError
from ..legacy import adaptive_hard_decode, adaptive_soft_decode
from ..multiuser import ALLOC_KINDS, GpParams, WzParams, bc_setup, gp_toy, mac_setup, wz_toy
from ..power import (PowerAllocation, alloc_exponential, alloc_flat, alloc_iterative, alloc_iterative_guided,
                     alloc_modified)
from ..rng import SHARED, STREAM_DESIGN, STREAM_SE, derived_seed, trial_seed, trial_stream
from ..sc import build_base, build_sc_design, sc_amp_decode, sc_se_trajectory
from ..se import se_trajectory
from .config import REQUIRED, ExperimentConfig

CSV_VERSION = 1

CODE_KEYS = frozenset({"L", "M", "n", "snr", "power", "noise_var", "rate", "rate_fraction"})
ALLOC_KEYS = frozenset({"alloc", "alloc_a", "alloc_f", "alloc_B", "r_pa", "r_pa_ratio"})


def tau_digest(taus) -> str:
    """Short SHA-256 digest of a float64 trajectory."""
    return hashlib.sha256(np.asarray(taus, dtype="<f8").tobytes()).hexdigest()[:16]


def design_seed(cfg: ExperimentConfig, *keys: int) -> int:
    return derived_seed(cfg.seed, SHARED, STREAM_DESIGN, *keys)


# ------------------------------------------------------------------ helpers


def code_params(cfg: ExperimentConfig) -> SparcParams:
    """``L``, ``M`` plus exactly one of ``rate`` / ``rate_fraction`` (of capacity) / ``n``."""
    L = cfg.get_int("L", REQUIRED)
    M = cfg.get_int("M", REQUIRED)
    noise_var = cfg.get_float("noise_var", 1.0)
    if cfg.has("power") == cfg.has("snr"):
        raise ConfigError("give exactly one of 'power' and 'snr'", "snr")
    power = cfg.get_float("power") if cfg.has("power") else cfg.get_float("snr") * noise_var
    given = [k for k in ("rate", "rate_fraction", "n") if cfg.has(k)]
    if len(given) != 1:
        raise ConfigError("give exactly one of 'rate', 'rate_fraction' and 'n'", "rate")
    if not power > 0:
        raise ConfigError("power must be > 0", "snr")
    if given[0] == "n":
        return SparcParams.from_length(cfg.get_int("n"), L, M, power, noise_var)
    if given[0] == "rate":
        R = cfg.get_rate("rate")
    else:
        R = cfg.get_float("rate_fraction") * 0.5 * math.log1p(power / noise_var)
    return SparcParams.from_rate(L, M, R, power, noise_var)


def allocation(cfg: ExperimentConfig, params: SparcParams) -> PowerAllocation:
    kind = cfg.get_str("alloc", "iterative")
    if kind == "flat":
        return alloc_flat(params)
    if kind == "exponential":
        return alloc_exponential(params)
    if kind == "modified":
        return alloc_modified(params, cfg.get_float("alloc_a", REQUIRED), cfg.get_float("alloc_f", REQUIRED))
    if kind == "iterative":
        r_pa = cfg.get_rate("r_pa")
        if cfg.has("r_pa_ratio"):
            r_pa = cfg.get_float("r_pa_ratio") * params.rate_nats
        return alloc_iterative(params, cfg.get_int("alloc_B"), r_pa)
    if kind == "guided":
        return alloc_iterative_guided(params, cfg.get_int("alloc_B"))
    raise ConfigError("alloc must be flat, exponential, modified, iterative or guided", "alloc")


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def mean_and_stderr(values) -> tuple[float, float]:
    a = np.asarray(values, dtype=np.float64)
    mean = float(a.mean())
    se = float(a.std(ddof=1) / math.sqrt(a.size)) if a.size > 1 else 0.0
    return mean, se


# --------------------------------------------------------------- framework


@dataclass
class Table:
    """Rendered output: comment lines, a header row, and data rows."""

    comments: list = field(default_factory=list)
    header: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    trailer: list = field(default_factory=list)

    def lines(self) -> list[str]:
        out = [f"# {c}" for c in self.comments]
        out.append(",".join(self.header))
        out.extend(",".join(fmt(v) for v in r) for r in self.rows)
        out.extend(f"# {c}" for c in self.trailer)
        return out


class Scenario:
    """Base class.  ``trial_based`` scenarios implement :meth:`trial`."""

    name = ""
    keys: frozenset = frozenset()
    trial_based = True
    toy = False
    metric_columns: tuple = ()        # trial columns after (trial, seed)
    summary_columns: tuple = ()       # columns averaged in the summary row (with stderr)

    def prepare(self, cfg: ExperimentConfig) -> Any:
        raise NotImplementedError

    def trial(self, state, cfg: ExperimentConfig, t: int) -> tuple:
        raise NotImplementedError

    def echo(self, state) -> dict:
        return {}

    def comments(self, cfg: ExperimentConfig, state) -> list[str]:
        first = f"sparc-csv v{CSV_VERSION} scenario={self.name} seed={cfg.seed} trials={cfg.trials}"
        if self.toy:
            first += " toy"
        out = [first]
        e = self.echo(state)
        if e:
            out.append(" ".join(f"{k}={fmt(v)}" for k, v in e.items()))
        return out

    def render(self, cfg: ExperimentConfig, state, results: list) -> Table:
        summ = [c for c in self.summary_columns]
        header = ["trial", "seed", *self.metric_columns, *(f"{c}_stderr" for c in summ)]
        rows = [(t, trial_seed(cfg.seed, t), *r, *([None] * len(summ))) for t, r in enumerate(results)]
        summary = ["summary", None]
        errs = []
        for j, col in enumerate(self.metric_columns):
            if col in summ:
                m, se = mean_and_stderr([r[j] for r in results])
                summary.append(m)
                errs.append(se)
            else:
                summary.append(None)
        rows.append((*summary, *errs))
        return Table(self.comments(cfg, state), header, rows)


# ------------------------------------------------------------------ channel


@dataclass
class ChannelState:
    params: SparcParams
    alloc: PowerAllocation
    op: Any
    decoder: str
    amp: AmpConfig
    hard_a: float
    soft_T: int
    soft_tau: np.ndarray | None


class ChannelScenario(Scenario):
    name = "channel"
    keys = CODE_KEYS | ALLOC_KEYS | {"design", "decoder", "max_iters", "stop_threshold", "hard_a", "soft_T",
                                     "mc_samples"}
    metric_columns = ("ser", "ber", "codeword_error", "iterations", "tau_digest")
    summary_columns = ("ser", "ber", "codeword_error")

    def prepare(self, cfg):
        params = code_params(cfg)
        alloc = allocation(cfg, params)
        op = build(cfg.get_str("design", "hadamard"), params, design_seed(cfg))
        decoder = cfg.get_str("decoder", "amp")
        if decoder not in ("amp", "hard", "soft"):
            raise ConfigError("decoder must be amp, hard or soft", "decoder")
        amp = AmpConfig(max_iters=cfg.get_int("max_iters", 25), stop_threshold=cfg.get_float("stop_threshold"))
        soft_T = cfg.get_int("soft_T", 10)
        soft_tau = None
        if decoder == "soft":
            tr = se_trajectory(alloc, params, mc_samples=cfg.get_int("mc_samples", 1000), max_iters=soft_T,
                               seed=derived_seed(cfg.seed, SHARED, STREAM_SE))
            soft_tau = tr.tau_sq
        return ChannelState(params, alloc, op, decoder, amp, cfg.get_float("hard_a", 0.5), soft_T, soft_tau)

    def echo(self, s):
        p = s.params
        return {"n": p.n, "L": p.L, "M": p.M, "rate_nats": p.realized_rate, "snr": p.snr, "capacity_nats": p.capacity}

    def trial(self, s, cfg, t):
        p = s.params
        rng = trial_stream(cfg.seed, t)
        msg = MessageVector.random(p.L, p.M, rng)
        y = forward(s.op, msg, s.alloc) + math.sqrt(p.noise_var) * rng.standard_normal(p.n)
        taus: list = []
        if s.decoder == "amp":
            res = amp_decode(s.op, y, s.alloc, p, s.amp)
            decoded, iters, taus = res.message, res.iterations, res.tau_sq_hat
        elif s.decoder == "hard":
            res = adaptive_hard_decode(s.op, y, s.alloc, p, s.hard_a)
            decoded, iters = res.message, res.steps
        else:
            res = adaptive_soft_decode(s.op, y, s.alloc, p, s.soft_T, s.soft_tau)
            decoded, iters = res.message, res.steps
        m = compute_metrics(msg, decoded)
        return (m.section_error_rate, m.bit_error_rate, int(m.codeword_error), iters, tau_digest(taus))


# -------------------------------------------------------------- sc-channel


@dataclass
class ScState:
    scd: Any
    params: SparcParams
    se_states: list
    tau_mode: str
    max_iters: int


class ScChannelScenario(Scenario):
    name = "sc-channel"
    keys = frozenset({"omega", "Lambda", "L", "M", "snr", "power", "noise_var", "rate", "rate_fraction",
                      "tau_mode", "max_iters", "mc_samples", "design"})
    metric_columns = ("ser", "ber", "codeword_error", "iterations")
    summary_columns = ("ser", "ber", "codeword_error")

    def prepare(self, cfg):
        L = cfg.get_int("L", REQUIRED)
        M = cfg.get_int("M", REQUIRED)
        noise_var = cfg.get_float("noise_var", 1.0)
        if cfg.has("power") == cfg.has("snr"):
            raise ConfigError("give exactly one of 'power' and 'snr'", "snr")
        P = cfg.get_float("power") if cfg.has("power") else cfg.get_float("snr") * noise_var
        if cfg.has("rate") == cfg.has("rate_fraction"):
            raise ConfigError("give exactly one of 'rate' and 'rate_fraction'", "rate")
        R = cfg.get_rate("rate") if cfg.has("rate") else (
            cfg.get_float("rate_fraction") * 0.5 * math.log1p(P / noise_var))
        base = build_base(cfg.get_int("omega", REQUIRED), cfg.get_int("Lambda", REQUIRED), P)
        scd = build_sc_design(base, L, M, design_seed(cfg), rate_nats=R, kind=cfg.get_str("design", "hadamard"))
        params = scd.params(noise_var)
        tau_mode = cfg.get_str("tau_mode", "se")
        if tau_mode not in ("se", "online"):
            raise ConfigError("tau_mode must be 'se' or 'online'", "tau_mode")
        max_iters = cfg.get_int("max_iters", 100)
        if max_iters < 1:
            raise ConfigError("max_iters must be >= 1", "max_iters")
        states = sc_se_trajectory(base, params.realized_rate, M, noise_var, cfg.get_int("mc_samples", 1000),
                                  max_iters, derived_seed(cfg.seed, SHARED, STREAM_SE))
        return ScState(scd, params, states, tau_mode, max_iters)

    def echo(self, s):
        p = s.params
        return {"n": p.n, "L": p.L, "M": p.M, "M_R": s.scd.M_R, "rate_nats": p.realized_rate, "tau_mode": s.tau_mode}

    def trial(self, s, cfg, t):
        p = s.params
        rng = trial_stream(cfg.seed, t)
        msg = MessageVector.random(p.L, p.M, rng)
        y = s.scd.encode(msg) + math.sqrt(p.noise_var) * rng.standard_normal(p.n)
        res = sc_amp_decode(s.scd, y, p, s.max_iters, truth=msg, tau_mode=s.tau_mode, se_states=s.se_states)
        m = res.metrics
        return (m.section_error_rate, m.bit_error_rate, int(m.codeword_error), res.iterations,
                np.array(res.block_nmse))

    def render(self, cfg, s, results):
        """Wave table: mean block NMSE over trials per iteration next to SC-SE.

        A trial that stopped early keeps its last value for later iterations.
        """
        T = max(max(len(r[-1]) for r in results), len(s.se_states)) - 1
        L_C = s.scd.base.L_C
        acc = np.zeros((T + 1, L_C))
        for r in results:
            traj = r[-1]
            padded = np.concatenate([traj, np.repeat(traj[-1:], T + 1 - len(traj), axis=0)])
            acc += padded
        acc /= len(results)
        rows = []
        for it in range(T + 1):
            psi = s.se_states[min(it, len(s.se_states) - 1)].psi
            for c in range(L_C):
                rows.append((it, c, float(acc[it, c]), float(psi[c])))
        trailer = []
        for j, col in enumerate(self.metric_columns[:3]):
            m, se = mean_and_stderr([r[j] for r in results])
            trailer.append(f"summary {col}={fmt(m)} {col}_stderr={fmt(se)}")
        return Table(self.comments(cfg, s), ["iteration", "block", "nmse", "se_prediction"], rows, trailer)


# ---------------------------------------------------------------- bc / mac


class BcScenario(Scenario):
    name = "bc"
    keys = frozenset({"P", "sigma1_sq", "sigma2_sq", "alpha", "gamma", "M", "n", "alloc", "design", "max_iters"})
    metric_columns = ("ser1", "ber1", "codeword_error1", "ser2", "ber2", "codeword_error2", "iterations1",
                      "iterations2")
    summary_columns = ("ser1", "ber1", "codeword_error1", "ser2", "ber2", "codeword_error2")

    def prepare(self, cfg):
        alloc = cfg.get_str("alloc", "guided")
        if alloc not in ALLOC_KINDS:
            raise ConfigError(f"alloc must be one of {ALLOC_KINDS}", "alloc")
        code = bc_setup(cfg.get_float("P", REQUIRED), cfg.get_float("sigma1_sq", REQUIRED),
                        cfg.get_float("sigma2_sq", REQUIRED), cfg.get_float("alpha", REQUIRED),
                        cfg.get_float("gamma", REQUIRED), cfg.get_int("M", REQUIRED), cfg.get_int("n", REQUIRED),
                        seed=design_seed(cfg), kind=cfg.get_str("design", "hadamard"), alloc=alloc)
        return code, AmpConfig(max_iters=cfg.get_int("max_iters", 100))

    def echo(self, state):
        code, _ = state
        e = {"n": code.n, "M": code.op.M, "L1": code.L1, "L2": code.L2,
             "R1_nats": code.params1.realized_rate, "R2_nats": code.params2.realized_rate}
        if code.degenerate:
            e["degenerate_users"] = "+".join(str(u) for u in code.degenerate)
        return e

    def trial(self, state, cfg, t):
        code, amp = state
        rng = trial_stream(cfg.seed, t)
        M = code.op.M
        m1 = MessageVector.random(code.L1, M, rng)
        m2 = MessageVector.random(code.L2, M, rng)
        x = code.encode(m1, m2)
        y1 = x + math.sqrt(code.params1.noise_var) * rng.standard_normal(code.n)
        sigma2_sq = code.params2.noise_var - code.alloc1.total
        y2 = x + math.sqrt(sigma2_sq) * rng.standard_normal(code.n)
        if 1 in code.degenerate:
            u1, it1 = (math.nan, math.nan, math.nan), 0
        else:
            r1 = code.decode_user1(y1, amp)
            k = compute_metrics(m1, code.user1_message(r1))
            u1, it1 = (k.section_error_rate, k.bit_error_rate, int(k.codeword_error)), r1.iterations
        r2 = code.decode_user2(y2, amp)
        if r2 is None:
            u2, it2 = (math.nan, math.nan, math.nan), 0
        else:
            k = compute_metrics(m2, r2.message)
            u2, it2 = (k.section_error_rate, k.bit_error_rate, int(k.codeword_error)), r2.iterations
        return (*u1, *u2, it1, it2)


class MacScenario(Scenario):
    name = "mac"
    keys = frozenset({"P1", "P2", "sigma_sq", "alpha", "gamma", "M", "n", "renormalize", "alloc", "design",
                      "max_iters"})
    metric_columns = ("ser1", "ber1", "codeword_error1", "ser2", "ber2", "codeword_error2", "iterations")
    summary_columns = ("ser1", "ber1", "codeword_error1", "ser2", "ber2", "codeword_error2")

    def prepare(self, cfg):
        alloc = cfg.get_str("alloc", "guided")
        if alloc not in ALLOC_KINDS:
            raise ConfigError(f"alloc must be one of {ALLOC_KINDS}", "alloc")
        code = mac_setup(cfg.get_float("P1", REQUIRED), cfg.get_float("P2", REQUIRED),
                         cfg.get_float("sigma_sq", 1.0), cfg.get_float("alpha", REQUIRED),
                         cfg.get_float("gamma", REQUIRED), cfg.get_int("M", REQUIRED), cfg.get_int("n", REQUIRED),
                         seed=design_seed(cfg), kind=cfg.get_str("design", "hadamard"),
                         renormalize=cfg.get_bool("renormalize", True), alloc=alloc)
        return code, AmpConfig(max_iters=cfg.get_int("max_iters", 100))

    def echo(self, state):
        code, _ = state
        return {"n": code.op.n, "M": code.op.M, "L1": code.params1.L, "L2": code.params2.L,
                "bracket_user": code.partition.bracket_user, "bracket_start": code.partition.bracket_start}

    def trial(self, state, cfg, t):
        code, amp = state
        rng = trial_stream(cfg.seed, t)
        M = code.op.M
        m1 = MessageVector.random(code.params1.L, M, rng)
        m2 = MessageVector.random(code.params2.L, M, rng)
        x1, x2 = code.encode(m1, m2)
        y = x1 + x2 + math.sqrt(code.params.noise_var) * rng.standard_normal(code.op.n)
        r = code.decode(y, amp)
        d1, d2 = code.split(r.message)
        k1, k2 = compute_metrics(m1, d1), compute_metrics(m2, d2)
        return (k1.section_error_rate, k1.bit_error_rate, int(k1.codeword_error),
                k2.section_error_rate, k2.bit_error_rate, int(k2.codeword_error), r.iterations)


# ----------------------------------------------------------------- compress


class CompressScenario(Scenario):
    name = "compress"
    keys = frozenset({"L", "b", "M", "rates", "sigma_sq", "source", "source_file", "selection_rule", "pow2",
                      "design"})

    def prepare(self, cfg):
        L = cfg.get_int("L", REQUIRED)
        rates = cfg.get_rates("rates")
        if not rates:
            raise ConfigError("rates must list at least one rate", "rates")
        sigma_sq = cfg.get_float("sigma_sq", 1.0)
        rule = cfg.get_str("selection_rule", "min_distance")
        if cfg.has("b") == cfg.has("M"):
            raise ConfigError("give exactly one of 'b' and 'M'", "b")
        codes = []
        for i, R in enumerate(rates):
            if cfg.has("b"):
                cp = CompressParams.from_b(L, cfg.get_float("b"), R, sigma_sq, cfg.get_bool("pow2", False), rule)
            else:
                cp = CompressParams.from_M(L, cfg.get_int("M"), R, sigma_sq, rule)
            codes.append((cp, build_compress_design(cp, design_seed(cfg, i), cfg.get_str("design", "hadamard"))))
        source = cfg.get_str("source", "gaussian")
        samples = None
        if source == "file":
            path = cfg.get_str("source_file", REQUIRED)
            try:
                samples = np.fromfile(Path(path), dtype="<f8")
            except OSError as exc:
                raise ConfigError(f"cannot read source_file: {exc}", "source_file") from None
            need = max(cp.params.n for cp, _ in codes) * cfg.trials
            if samples.size < need:
                raise ConfigError(f"source_file holds {samples.size} samples; {need} needed", "source_file")
        elif source != "gaussian":
            raise ConfigError("source must be 'gaussian' or 'file'", "source")
        return codes, samples

    def echo(self, state):
        codes, _ = state
        return {"L": codes[0][0].params.L, "M": codes[0][0].params.M,
                "n": "/".join(str(cp.params.n) for cp, _ in codes)}

    def trial(self, state, cfg, t):
        codes, samples = state
        out = []
        for i, (cp, op) in enumerate(codes):
            n = cp.params.n
            if samples is None:
                s = math.sqrt(cp.sigma_sq) * trial_stream(cfg.seed, t).standard_normal(n)
            else:
                s = samples[t * n:(t + 1) * n]
            msg = sc_encode(op, s, cp)
            out.append((nats_to_bits(cp.params.rate_nats), distortion(s, reconstruct(op, msg, cp))))
        return tuple(out)

    def render(self, cfg, state, results):
        codes, _ = state
        rows = []
        for t, per_rate in enumerate(results):
            for rate_bits, d in per_rate:
                rows.append((t, rate_bits, d, None))
        trailer = []
        for i, (cp, _) in enumerate(codes):
            m, se = mean_and_stderr([r[i][1] for r in results])
            rows.append(("summary", results[0][i][0], m, se))
            trailer.append(f"rate_bits={fmt(results[0][i][0])} D_star={fmt(optimal_distortion(cp.params.rate_nats, cp.sigma_sq))}")
        return Table(self.comments(cfg, state), ["trial", "rate_bits", "distortion", "distortion_stderr"], rows,
                     trailer)


# ------------------------------------------------------------ se and alloc


class SeScenario(Scenario):
    name = "se"
    keys = CODE_KEYS | ALLOC_KEYS | {"mode", "hard_a", "mc_samples", "max_iters"}
    trial_based = False

    def prepare(self, cfg):
        params = code_params(cfg)
        alloc = allocation(cfg, params)
        mode = cfg.get_str("mode", "soft")
        if mode == "hard":
            mode = ("hard", cfg.get_float("hard_a", 0.0))
        elif mode != "soft":
            raise ConfigError("mode must be 'soft' or 'hard'", "mode")
        tr = se_trajectory(alloc, params, mode, cfg.get_int("mc_samples", 1000), cfg.get_int("max_iters", 100),
                           derived_seed(cfg.seed, SHARED, STREAM_SE))
        return params, tr

    def render(self, cfg, state, results):
        params, tr = state
        rows = [(t, float(x), float(ts)) for t, (x, ts) in enumerate(zip(tr.x, tr.tau_sq))]
        return Table(self.comments(cfg, state), ["t", "x_t", "tau_sq"], rows)


class AllocScenario(Scenario):
    name = "alloc"
    keys = CODE_KEYS | ALLOC_KEYS
    trial_based = False

    def prepare(self, cfg):
        params = code_params(cfg)
        return params, allocation(cfg, params)

    def render(self, cfg, state, results):
        _, alloc = state
        rows = [(l + 1, float(v)) for l, v in enumerate(alloc.values)]
        return Table(self.comments(cfg, state), ["section", "power"], rows)


# ------------------------------------------------------------------- toys


def _toy_design(cfg: ExperimentConfig, n: int, L: int, M: int):
    return build(cfg.get_str("design", "gaussian"), SparcParams.from_length(n, L, M, 1.0, 1.0), design_seed(cfg))


class WzScenario(Scenario):
    name = "wz"
    toy = True
    keys = frozenset({"n", "L", "M", "M_prime", "sigma_sq", "N", "D", "design"})
    metric_columns = ("distortion", "u_recovered")
    summary_columns = ("distortion", "u_recovered")

    def prepare(self, cfg):
        wp = WzParams(cfg.get_int("n", REQUIRED), cfg.get_int("L", REQUIRED), cfg.get_int("M", REQUIRED),
                      cfg.get_int("M_prime", REQUIRED), cfg.get_float("sigma_sq", 1.0), cfg.get_float("N", REQUIRED),
                      cfg.get_float("D", REQUIRED))
        return wp, _toy_design(cfg, wp.n, wp.L, wp.M)

    def echo(self, state):
        wp, _ = state
        return {"Q": wp.Q, "var_x_given_y": wp.var_x_given_y, "D": wp.D, "bins": (wp.M // wp.M_prime) ** wp.L}

    def trial(self, state, cfg, t):
        wp, op = state
        rng = trial_stream(cfg.seed, t)
        x = math.sqrt(wp.sigma_sq) * rng.standard_normal(wp.n)
        y = x + math.sqrt(wp.N) * rng.standard_normal(wp.n)
        r = wz_toy(wp, x, y, op)
        return (r.distortion, int(r.u_decoded == r.u_message))


class GpScenario(Scenario):
    name = "gp"
    toy = True
    keys = frozenset({"n", "L", "M", "M_prime", "P", "N", "sigma_s_sq", "design"})
    metric_columns = ("correct",)
    summary_columns = ("correct",)

    def prepare(self, cfg):
        gp = GpParams(cfg.get_int("n", REQUIRED), cfg.get_int("L", REQUIRED), cfg.get_int("M", REQUIRED),
                      cfg.get_int("M_prime", REQUIRED), cfg.get_float("P", REQUIRED), cfg.get_float("N", REQUIRED),
                      cfg.get_float("sigma_s_sq", REQUIRED))
        return gp, _toy_design(cfg, gp.n, gp.L, gp.M)

    def echo(self, state):
        gp, _ = state
        return {"alpha": gp.alpha, "P": gp.P, "N": gp.N, "bins": (gp.M // gp.M_prime) ** gp.L}

    def trial(self, state, cfg, t):
        gp, op = state
        rng = trial_stream(cfg.seed, t)
        W = tuple(int(w) for w in rng.integers(0, gp.M // gp.M_prime, size=gp.L))
        s = math.sqrt(gp.sigma_s_sq) * rng.standard_normal(gp.n)
        z = math.sqrt(gp.N) * rng.standard_normal(gp.n)
        return (int(gp_toy(gp, W, s, z, op).correct),)


SCENARIO_TABLE = {s.name: s for s in (ChannelScenario(), ScChannelScenario(), BcScenario(), MacScenario(),
                                      CompressScenario(), SeScenario(), AllocScenario(), WzScenario(), GpScenario())}

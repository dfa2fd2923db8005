"""Deterministic Monte Carlo engine: holdout trials, BCa intervals, k-sweeps,
and the random-parameter study.

Every random object is derived from an integer path through SeedSequence,
so results are identical for any worker count or execution order.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from . import theory
from .estimators import holdout_estimator
from .linalg import frobenius_error, spd_sqrt
from .noise import RadialLaw, gamma_moments, parse_radial, sample_noise_matrix
from .population import InverseWishartModel, sample_inverse_wishart

# fixed integer tags for the named sub-streams of a master seed
_STREAMS = {"sigma": 11, "noise": 12, "boot": 13, "study": 14}


def child_seed(seed: int, *path) -> int:
    """Derive a 64-bit sub-seed from an integer path; stable across runs,
    platforms, and thread schedules."""
    entropy = (int(seed),) + tuple(int(x) for x in path)
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


def stream_seed(seed: int, rep: int, stream: str) -> int:
    """Sub-seed for one named stream ('sigma', 'noise', ...) of one rep."""
    return child_seed(seed, rep, _STREAMS[stream])


@dataclass(frozen=True)
class TrialConfig:
    """One Monte Carlo setting: dimension n, t observations with the last
    t_out columns held out, inverse-Wishart shape p, radial noise law, and
    master seed."""

    n: int
    t: int
    t_out: int
    p: float
    radial: RadialLaw
    seed: int

    def __post_init__(self):
        if not 1 <= self.t_out <= self.t - 1:
            raise ValueError(
                f"t_out must lie in [1, t-1], got t_out={self.t_out}, t={self.t}"
            )
        if self.radial.n != self.n:
            raise ValueError(
                f"radial law dimension {self.radial.n} does not match n={self.n}"
            )


def _rep_data(n, t, p, radial, seed, rep_index):
    """Population matrix and data matrix for one rep, deterministic in
    (seed, rep_index)."""
    model = InverseWishartModel(n=n, p=p)
    sigma = sample_inverse_wishart(model, stream_seed(seed, rep_index, "sigma"))
    x = sample_noise_matrix(radial, n, t, stream_seed(seed, rep_index, "noise"))
    return sigma, spd_sqrt(sigma) @ x


def _split_errors(sigma, data, t_out_list):
    """Holdout error of one data draw at each test size in t_out_list."""
    t = data.shape[1]
    out = np.empty(len(t_out_list))
    for i, t_out in enumerate(t_out_list):
        t_in = t - int(t_out)
        xi = holdout_estimator(data[:, :t_in], data[:, t_in:])
        out[i] = frobenius_error(xi, sigma)
    return out


def run_holdout_trial(cfg: TrialConfig, rep_index: int) -> float:
    """Frobenius error of the holdout estimator for one seeded draw of
    (Sigma, data)."""
    sigma, data = _rep_data(cfg.n, cfg.t, cfg.p, cfg.radial, cfg.seed, rep_index)
    return float(_split_errors(sigma, data, [cfg.t_out])[0])


def bca_interval(samples, level: float = 0.95, n_boot: int = 2000, seed: int = 0):
    """Bias-corrected accelerated bootstrap interval for the mean.

    The bias correction z0 comes from the fraction of bootstrap means below
    the sample mean, the acceleration from jackknife skewness; resampling is
    seeded and fixed at B = 2000 by default.  Degenerate samples (all equal)
    return (mean, mean).
    """
    x = np.asarray(samples, dtype=float)
    m = x.size
    if m < 10:
        raise ValueError(f"need at least 10 samples for a BCa interval, got {m}")
    if not 0.0 < level < 1.0:
        raise ValueError(f"confidence level must lie in (0, 1), got {level}")
    mean = float(np.mean(x))
    if np.ptp(x) == 0.0:
        return mean, mean
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), _STREAMS["boot"])))
    boot = x[rng.integers(0, m, size=(n_boot, m))].mean(axis=1)
    # midrank tie handling keeps z0 at 0 when the bootstrap distribution
    # has an atom exactly at the sample mean (discrete samples)
    frac = (
        np.count_nonzero(boot < mean) + 0.5 * np.count_nonzero(boot == mean)
    ) / n_boot
    frac = min(max(frac, 1.0 / (n_boot + 1)), 1.0 - 1.0 / (n_boot + 1))
    z0 = float(norm.ppf(frac))
    # jackknife leave-one-out means and their skewness
    theta = (mean * m - x) / (m - 1)
    d = theta.mean() - theta
    s2 = float(np.sum(d * d))
    a = 0.0 if s2 == 0.0 else float(np.sum(d ** 3)) / (6.0 * s2 ** 1.5)
    alpha = (1.0 - level) / 2.0
    out = []
    for tail in (alpha, 1.0 - alpha):
        z = z0 + float(norm.ppf(tail))
        adj = float(norm.cdf(z0 + z / (1.0 - a * z)))
        adj = min(max(adj, 0.0), 1.0)
        out.append(float(np.percentile(boot, 100.0 * adj)))
    return out[0], out[1]


@dataclass(frozen=True)
class ErrorReport:
    """Aggregated Monte Carlo estimate at one split ratio."""

    k: float
    t_out: int
    mc_mean: float
    ci_low: float
    ci_high: float
    reps: int
    theory_linear: float
    theory_quadratic: float | None = None


def default_t_out_grid(t: int) -> list:
    """Divisors of t restricted to [1, t-1]."""
    return [d for d in range(1, t) if t % d == 0]


def _worker_count(workers=None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("HOLDOUT_LAB_THREADS", "")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def sweep_k(
    cfg: TrialConfig,
    reps: int,
    t_out_list=None,
    quadratic: bool | None = None,
    m4_convention: str = "paper",
    qin_convention: str = "default",
    workers: int | None = None,
) -> list:
    """Monte Carlo error curve over a grid of test sizes.

    Runs `reps` independent (Sigma, data) draws, reusing each draw across the
    whole grid (cfg.t_out is ignored when t_out_list is given).  Returns one
    ErrorReport per t_out with the mean, a 95% BCa interval, and the theory
    values evaluated at the finite-n moment ratios of the noise law.
    quadratic None means "include the quadratic theory when the law's sixth
    and eighth moments are finite".  Worker count defaults to HOLDOUT_LAB_THREADS (or
    1); results do not depend on it.  Fewer than 10 reps degrade the
    interval to (mean, mean).
    """
    if reps < 2:
        raise ValueError(f"need reps >= 2, got {reps}")
    if t_out_list is None:
        t_out_list = default_t_out_grid(cfg.t)
    t_out_list = [int(x) for x in t_out_list]
    if not t_out_list:
        raise ValueError("empty t_out grid")
    for t_out in t_out_list:
        if not 1 <= t_out <= cfg.t - 1:
            raise ValueError(f"t_out must lie in [1, t-1], got {t_out}")

    gm = gamma_moments(cfg.radial)
    if quadratic is None:
        quadratic = gm.gamma3 is not None and gm.gamma4 is not None

    errors = np.empty((reps, len(t_out_list)))

    def one_rep(rep):
        sigma, data = _rep_data(cfg.n, cfg.t, cfg.p, cfg.radial, cfg.seed, rep)
        return _split_errors(sigma, data, t_out_list)

    n_workers = _worker_count(workers)
    if n_workers == 1:
        for rep in range(reps):
            errors[rep] = one_rep(rep)
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            for rep, row in enumerate(pool.map(one_rep, range(reps))):
                errors[rep] = row

    reports = []
    for j, t_out in enumerate(t_out_list):
        col = errors[:, j]
        mean = float(col.mean())
        if reps >= 10:
            lo, hi = bca_interval(
                col, seed=child_seed(cfg.seed, _STREAMS["boot"], t_out)
            )
        else:
            lo, hi = mean, mean
        k = cfg.t / t_out
        theory_lin = theory.holdout_error_linear(
            k, cfg.t, cfg.n, cfg.p, gm.gamma, qin_convention
        )
        theory_quad = None
        if quadratic:
            theory_quad = theory.holdout_error_quadratic(
                k, cfg.t, cfg.n, cfg.p,
                gm.gamma, gm.gamma3, gm.gamma4,
                m4_convention, qin_convention,
            )
        reports.append(
            ErrorReport(
                k=k,
                t_out=t_out,
                mc_mean=mean,
                ci_low=min(lo, mean),
                ci_high=max(hi, mean),
                reps=reps,
                theory_linear=theory_lin,
                theory_quadratic=theory_quad,
            )
        )
    return reports


@dataclass(frozen=True)
class StudyRanges:
    """Uniform sampling ranges for the random-parameter study."""

    n: tuple = (100, 1000)
    p: tuple = (0.1, 0.9)
    q: tuple = (0.1, 0.9)
    laws: tuple = ("gaussian",)


def random_param_study(
    ranges: StudyRanges,
    trials: int,
    reps: int,
    seed: int,
    m4_convention: str = "paper",
    qin_convention: str = "default",
    workers: int | None = None,
) -> list:
    """Random draws of (n, p, q, law, k) with a Monte Carlo holdout error and
    theory value per draw.

    k is drawn uniformly among the divisors of t greater than 1 (so the test
    size t/k is an integer).  Returns a list of (params dict, ErrorReport),
    scatter-ready with theory on one axis and the MC mean on the other.
    trials = 0 yields an empty list.
    """
    if trials < 0:
        raise ValueError(f"trials must be >= 0, got {trials}")
    if not ranges.laws:
        raise ValueError("need at least one law in the study ranges")
    out = []
    for i in range(trials):
        rng = np.random.default_rng(
            np.random.SeedSequence((int(seed), i, _STREAMS["study"]))
        )
        n = int(rng.integers(ranges.n[0], ranges.n[1] + 1))
        p = float(rng.uniform(*ranges.p))
        q = float(rng.uniform(*ranges.q))
        t = int(round(n / q))
        law_name = ranges.laws[int(rng.integers(0, len(ranges.laws)))]
        law = parse_radial(law_name, n)
        divisors_k = [d for d in range(2, t + 1) if t % d == 0]
        k = int(divisors_k[int(rng.integers(0, len(divisors_k)))])
        t_out = t // k
        cfg = TrialConfig(
            n=n, t=t, t_out=t_out, p=p, radial=law,
            seed=child_seed(seed, i, _STREAMS["study"]),
        )
        report = sweep_k(
            cfg, reps, t_out_list=[t_out],
            m4_convention=m4_convention, qin_convention=qin_convention,
            workers=workers,
        )[0]
        params = {
            "n": n, "t": t, "p": p, "q": q,
            "radial": law.label, "k": t / t_out,
        }
        out.append((params, report))
    return out

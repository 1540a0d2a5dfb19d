"""Exact information-gain bookkeeping on finite parameter grids.

A grid is a finite set of parameter points with prior weights and a positive
MSE for each point. The likelihood is taken to depend on the parameter only
through its MSE::

    log p(D | theta) = -c * log MSE(theta) + const(D)

``const(D)`` cancels from the posterior, from the information gain and from
every reward difference, so it is fixed to zero throughout. For the
Gaussian-residual model with ``n`` data points the exponent is ``c = n / 2``
(see :meth:`ParameterGrid.gaussian`).

All likelihood arithmetic is done in log space; ``mse ** -c`` overflows for
small MSE and large ``c``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

TOL = 1e-9


@dataclass
class ParameterGrid:
    prior: np.ndarray
    mse: np.ndarray
    c: float
    thetas: list | None = None

    def __post_init__(self):
        self.prior = np.asarray(self.prior, dtype=np.float64)
        self.mse = np.asarray(self.mse, dtype=np.float64)
        if self.prior.ndim != 1 or self.prior.shape != self.mse.shape or len(self.prior) < 1:
            raise ValueError("prior and mse must be 1-D arrays of equal, nonzero length")
        if np.any(self.prior < 0) or abs(self.prior.sum() - 1.0) > 1e-12:
            raise ValueError(f"prior must be a probability vector (sum={self.prior.sum()!r})")
        if not np.all(np.isfinite(self.mse)) or np.any(self.mse <= 0):
            raise ValueError("every mse must be positive and finite")
        if not self.c > 0:
            raise ValueError("likelihood exponent c must be positive")
        if self.thetas is not None and len(self.thetas) != len(self.prior):
            raise ValueError("thetas must match the grid size")

    @classmethod
    def gaussian(cls, prior, mse, n: int, thetas=None) -> "ParameterGrid":
        """Grid for a Gaussian residual model fitted to ``n`` points (c = n / 2)."""
        return cls(prior, mse, n / 2.0, thetas)

    def __len__(self):
        return len(self.prior)

    @property
    def log_likelihood(self) -> np.ndarray:
        return -self.c * np.log(self.mse)

    @property
    def log_prior(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.prior)

    def log_evidence(self) -> float:
        """log p(D) = log sum_i prior_i p(D | theta_i)."""
        return float(logsumexp(self.log_prior + self.log_likelihood))

    def to_dict(self) -> dict:
        return {"prior": self.prior.tolist(), "mse": self.mse.tolist(), "c": self.c}

    @classmethod
    def from_dict(cls, d: dict) -> "ParameterGrid":
        return cls(np.array(d["prior"]), np.array(d["mse"]), d["c"])


def posterior(grid: ParameterGrid) -> np.ndarray:
    log_joint = grid.log_prior + grid.log_likelihood
    w = np.exp(log_joint - log_joint.max())
    return w / w.sum()


@dataclass
class InformationGain:
    kl: float  # sum_i post_i * log(post_i / prior_i)
    identity: float  # E_post[log p(D | theta)] - log p(D)

    @property
    def discrepancy(self) -> float:
        return abs(self.kl - self.identity)


def information_gain(grid: ParameterGrid) -> InformationGain:
    post = posterior(grid)
    nz = post > 0
    kl = float(np.sum(post[nz] * np.log(post[nz] / grid.prior[nz])))
    identity = float(np.sum(post * grid.log_likelihood)) - grid.log_evidence()
    return InformationGain(kl, identity)


def theta_d_condition_margin(grid: ParameterGrid, index: int) -> float:
    """log p(D | theta_index) - E_post[log p(D | theta)]; nonnegative when admissible."""
    ll = grid.log_likelihood
    return float(ll[index] - np.sum(posterior(grid) * ll))


def mle_index(grid: ParameterGrid) -> int:
    """argmin of MSE; ties go to the lowest index."""
    return int(np.argmin(grid.mse))


def submaximal_index(grid: ParameterGrid) -> int | None:
    """Best-likelihood point other than every maximiser that still meets the
    theta_D condition, or None when no such point exists."""
    ll = grid.log_likelihood
    best = ll.max()
    post_mean = float(np.sum(posterior(grid) * ll))
    candidates = [i for i in np.argsort(-ll, kind="stable") if ll[i] < best and ll[i] >= post_mean]
    return int(candidates[0]) if candidates else None


@dataclass
class OracleReport:
    ig: float
    ig_identity: float
    r_exp: float
    r_point: np.ndarray
    theta_d: int | None
    policy: str
    condition_margin: float
    checks: dict[str, tuple[bool, float]] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(ok for ok, _ in self.checks.values())


def intrinsic_rewards(grid: ParameterGrid, theta_d_policy: str = "exact_mle",
                      theta_d: int | None = None) -> OracleReport:
    """Expected and pointwise rewards relative to a chosen reference point.

    ``r_exp = E_prior[log MSE] - log MSE(theta_D)`` and, for every grid point,
    ``r_point = log MSE(theta) - log MSE(theta_D)``. ``theta_d`` overrides the
    policy with an explicit index.
    """
    if theta_d is None:
        if theta_d_policy == "exact_mle":
            theta_d = mle_index(grid)
        elif theta_d_policy == "condition_satisfying_submaximal":
            theta_d = submaximal_index(grid)
        else:
            raise ValueError(f"unknown theta_D policy {theta_d_policy!r}")
    else:
        theta_d_policy = "explicit"
    gain = information_gain(grid)
    log_mse = np.log(grid.mse)
    if theta_d is None:
        return OracleReport(gain.kl, gain.identity, float("nan"), np.full(len(grid), np.nan), None,
                            theta_d_policy, float("nan"),
                            {"theta_d_found": (False, float("nan"))})
    r_exp = float(np.sum(grid.prior * log_mse) - log_mse[theta_d])
    r_point = log_mse - log_mse[theta_d]
    margin = theta_d_condition_margin(grid, theta_d)
    checks = {
        "theta_d_condition": (margin >= -TOL, margin),
        "kl_identity": (gain.discrepancy < TOL, -gain.discrepancy),
        "ig_nonnegative": (gain.kl >= -TOL, gain.kl),
        "monotone_bound": (grid.c * r_exp - gain.kl >= -TOL, grid.c * r_exp - gain.kl),
    }
    return OracleReport(gain.kl, gain.identity, r_exp, r_point, theta_d, theta_d_policy, margin, checks)


# random instance generation -----------------------------------------------

def random_grid(rng: np.random.Generator, min_size=2, max_size=100, mse_range=(1e-3, 1e3),
                c_range=(0.5, 50.0)) -> ParameterGrid:
    n = int(rng.integers(min_size, max_size + 1))
    mse = np.exp(rng.uniform(np.log(mse_range[0]), np.log(mse_range[1]), size=n))
    prior = rng.dirichlet(np.ones(n))
    prior /= prior.sum()
    c = float(np.exp(rng.uniform(np.log(c_range[0]), np.log(c_range[1]))))
    return ParameterGrid(prior, mse, c)


def constant_grid(rng: np.random.Generator, perturbation: float = 0.0) -> ParameterGrid:
    """Grid whose MSE is constant, optionally with a relative jitter of ``perturbation``."""
    base = random_grid(rng)
    level = float(base.mse[0])
    mse = level * (1.0 + perturbation * rng.uniform(-1.0, 1.0, size=len(base)))
    return ParameterGrid(base.prior, mse, base.c)


@dataclass
class CheckTally:
    name: str
    description: str
    checked: int = 0
    failures: int = 0
    worst_margin: float = float("inf")
    counterexample: dict | None = None

    def record(self, ok: bool, margin: float, grid: ParameterGrid, **extra):
        self.checked += 1
        if np.isfinite(margin):
            self.worst_margin = min(self.worst_margin, margin)
        if not ok:
            self.failures += 1
            if self.counterexample is None:
                self.counterexample = {"check": self.name, "margin": margin, "grid": grid.to_dict(), **extra}

    @property
    def passed(self) -> bool:
        return self.checked > 0 and self.failures == 0


@dataclass
class TheoremSummary:
    tallies: dict[str, CheckTally]
    instances: list[dict]
    negative_examples: int

    @property
    def passed(self) -> bool:
        return all(t.passed for t in self.tallies.values())

    def counterexamples(self) -> list[dict]:
        return [t.counterexample for t in self.tallies.values() if t.counterexample is not None]

    def table(self) -> str:
        lines = [f"{'check':<22}{'result':<8}{'checked':>9}{'failures':>10}  worst margin"]
        for t in self.tallies.values():
            lines.append(f"{t.name:<22}{'PASS' if t.passed else 'FAIL':<8}{t.checked:>9}"
                         f"{t.failures:>10}  {t.worst_margin:.3e}")
        return "\n".join(lines)

    def dump_counterexamples(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.counterexamples(), f, indent=2)


def check_theorems(instance_count: int, rng: np.random.Generator) -> TheoremSummary:
    """Run every monotonicity / zero-equivalence / necessity check.

    ``instance_count`` random grids are generated, plus one constant-MSE and
    one near-constant grid for every ten random ones (at least one each).
    """
    if instance_count < 1:
        raise ValueError("instance_count must be at least 1")
    t = {name: CheckTally(name, desc) for name, desc in [
        ("kl_identity", "KL route equals E_post[log lik] - log evidence within 1e-9"),
        ("monotone_bound", "c * r_exp >= IG - 1e-9 with exact-MLE theta_D"),
        ("zero_equivalence", "constant MSE gives IG = 0 and r_exp = 0"),
        ("zero_converse", "r_exp = 0 on a non-constant grid forces IG < 1e-9"),
        ("mle_dominates", "max log lik >= E_post[log lik], equality iff constant"),
        ("mle_pointwise", "no negative pointwise reward under exact MLE"),
        ("submaximal_negative", "some sub-maximal theta_D gives r_point < 0 while IG > 0"),
    ]}
    rows = []
    extra = max(1, instance_count // 10)
    kinds = ["random"] * instance_count + ["constant"] * extra + ["near_constant"] * extra
    negatives = 0
    for i, kind in enumerate(kinds):
        if kind == "random":
            grid = random_grid(rng)
        elif kind == "constant":
            grid = constant_grid(rng)
        else:
            grid = constant_grid(rng, perturbation=1e-10)
        report = intrinsic_rewards(grid, "exact_mle")
        ll = grid.log_likelihood
        constant = bool(np.all(grid.mse == grid.mse[0]))

        t["kl_identity"].record(report.checks["kl_identity"][0], -abs(report.ig - report.ig_identity),
                                grid, instance=i)
        bound = grid.c * report.r_exp - report.ig
        t["monotone_bound"].record(bound >= -TOL, bound, grid, instance=i, r_exp=report.r_exp, ig=report.ig)
        if constant:
            worst = -max(abs(report.ig), abs(report.r_exp), float(np.max(np.abs(report.r_point))))
            t["zero_equivalence"].record(worst >= -TOL, worst, grid, instance=i)
        elif grid.c * report.r_exp <= TOL:
            t["zero_converse"].record(report.ig < TOL, TOL - report.ig, grid, instance=i)
        # summing non-negative gaps avoids cancellation in max - mean
        post = posterior(grid)
        gaps = ll.max() - ll
        l1 = float(np.sum(post * gaps))
        if constant:
            t["mle_dominates"].record(abs(l1) <= TOL, -abs(l1), grid, instance=i)
        elif np.ptp(ll) > 1e-6 and post[gaps > 0].sum() > 1e-12:
            t["mle_dominates"].record(l1 > 0, l1, grid, instance=i)
        else:
            t["mle_dominates"].record(l1 >= -TOL, l1, grid, instance=i)
        min_point = float(report.r_point.min())
        t["mle_pointwise"].record(min_point >= -TOL, min_point, grid, instance=i)

        sub = intrinsic_rewards(grid, "condition_satisfying_submaximal")
        exhibits = (sub.theta_d is not None and sub.condition_margin >= -TOL
                    and float(sub.r_point.min()) < -TOL and sub.ig > TOL)
        negatives += exhibits
        rows.append({
            "instance": i, "kind": kind, "size": len(grid), "c": grid.c, "ig_kl": report.ig,
            "ig_identity": report.ig_identity, "r_exp": report.r_exp, "bound_margin": bound,
            "l1_margin": l1, "theta_d": report.theta_d,
            "submaximal_theta_d": -1 if sub.theta_d is None else sub.theta_d,
            "negative_example": int(exhibits),
        })
    neg = t["submaximal_negative"]
    neg.checked = len(kinds)
    neg.worst_margin = float(negatives)
    if negatives == 0:
        neg.failures = 1
        neg.counterexample = {"check": neg.name, "margin": 0.0,
                             "note": "no instance exhibited a negative pointwise reward with positive IG"}
    return TheoremSummary(t, rows, negatives)

"""Multi-class soft-margin SVM trained from scratch, with precision
calibration against human identification rates.

Binary subproblems are solved by sequential minimal optimization using
maximal-violating-pair working sets, to a KKT tolerance of 1e-3. Pairwise
probabilities come from sigmoids fitted on held-out-fold decision values;
a pairwise-coupling solve turns them into a per-emotion intensity
distribution that sums to one.

The penalty c is never fitted to human rating values: `calibrate_c` probes
a grid, records the model's confidence on target profiles per grid point,
and picks the c whose confidence best mirrors the human precision. The
spread of human precision is mapped back through the measured curve to a
variance for c, from which per-participant classifiers are drawn.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .appraisal import AppraisalVector
from .qlearn import derive_seed
from .scherer import EMOTIONS, LabeledSample

log = logging.getLogger(__name__)

KKT_TOL = 1e-3
MAX_PASSES_PER_POINT = 400  # iteration cap = this * n


class DegenerateCorpusError(ValueError):
    """Corpus cannot support training (fewer than two classes, etc.)."""


class CalibrationRangeError(ValueError):
    """Requested precision is outside what the probed grid can produce."""


# ---------------------------------------------------------------------------
# kernels and corpus packing


def rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    an = (a * a).sum(axis=1)[:, None]
    bn = (b * b).sum(axis=1)[None, :]
    sq = an + bn - 2.0 * (a @ b.T)
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


def default_bandwidth(x: np.ndarray) -> float:
    """Scale heuristic over the pooled feature values."""
    var = float(x.var())
    return 1.0 / (4.0 * var) if var > 0 else 1.0


class CorpusMatrix:
    """Packed corpus with per-pair kernel caching.

    Training many models on one corpus (a calibration grid, simulated
    participants) re-uses the pair kernels, which do not depend on c.
    """

    def __init__(self, corpus: list[LabeledSample], gamma: float | None = None):
        if not corpus:
            raise DegenerateCorpusError("empty corpus")
        self.x = np.array([s.vector.as_tuple() for s in corpus], dtype=float)
        self.labels = [s.label for s in corpus]
        self.classes = tuple(e for e in EMOTIONS if e in set(self.labels))
        extra = set(self.labels) - set(self.classes)
        if extra:
            raise DegenerateCorpusError(f"unknown emotion labels {sorted(extra)}")
        if len(self.classes) < 2:
            raise DegenerateCorpusError("corpus has fewer than two classes")
        self.index = {
            c: np.array([i for i, l in enumerate(self.labels) if l == c])
            for c in self.classes
        }
        for c, idx in self.index.items():
            if len(idx) < 2:
                raise DegenerateCorpusError(f"class {c} has fewer than two samples")
        self.gamma = default_bandwidth(self.x) if gamma is None else gamma
        self._pair_kernels: dict[tuple[str, str], np.ndarray] = {}
        self._pair_x: dict[tuple[str, str], np.ndarray] = {}
        self._pair_y: dict[tuple[str, str], np.ndarray] = {}

    def pair(self, a: str, b: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        key = (a, b)
        if key not in self._pair_kernels:
            idx = np.concatenate([self.index[a], self.index[b]])
            x = self.x[idx]
            y = np.where(np.arange(len(idx)) < len(self.index[a]), 1.0, -1.0)
            self._pair_kernels[key] = rbf_kernel(x, x, self.gamma)
            self._pair_x[key] = x
            self._pair_y[key] = y
        return self._pair_x[key], self._pair_y[key], self._pair_kernels[key]


# ---------------------------------------------------------------------------
# SMO for one binary subproblem


@dataclass
class SmoResult:
    alpha: np.ndarray
    bias: float
    converged: bool
    iterations: int

    def objective(self, y: np.ndarray, kernel: np.ndarray) -> float:
        ay = self.alpha * y
        return float(self.alpha.sum() - 0.5 * ay @ kernel @ ay)


def smo_solve(
    kernel: np.ndarray, y: np.ndarray, c: float,
    tol: float = KKT_TOL, max_iter: int | None = None,
) -> SmoResult:
    """Maximal-violating-pair SMO on the dual soft-margin problem."""
    n = len(y)
    if max_iter is None:
        max_iter = MAX_PASSES_PER_POINT * n
    alpha = np.zeros(n)
    f = np.zeros(n)  # f_i = sum_j alpha_j y_j K_ij
    err = f - y
    pos = y > 0
    iterations = 0
    converged = False
    while iterations < max_iter:
        up = (pos & (alpha < c)) | (~pos & (alpha > 0))
        low = (pos & (alpha > 0)) | (~pos & (alpha < c))
        if not up.any() or not low.any():
            converged = True
            break
        i = int(np.where(up, err, np.inf).argmin())
        j = int(np.where(low, err, -np.inf).argmax())
        if err[j] - err[i] <= tol:
            converged = True
            break
        # move along alpha_i += y_i t, alpha_j -= y_j t (keeps sum alpha.y fixed)
        room_i = c - alpha[i] if pos[i] else alpha[i]
        room_j = alpha[j] if pos[j] else c - alpha[j]
        eta = kernel[i, i] + kernel[j, j] - 2.0 * kernel[i, j]
        t_max = min(room_i, room_j)
        t = t_max if eta <= 1e-12 else min((err[j] - err[i]) / eta, t_max)
        if t <= 0:
            converged = True
            break
        alpha[i] = min(max(alpha[i] + (t if pos[i] else -t), 0.0), c)
        alpha[j] = min(max(alpha[j] - (t if pos[j] else -t), 0.0), c)
        delta = t * (kernel[i] - kernel[j])
        f += delta
        err += delta
        iterations += 1
    if not converged:
        log.warning("SMO hit iteration cap (%d) before KKT tolerance", max_iter)
    up = (pos & (alpha < c)) | (~pos & (alpha > 0))
    low = (pos & (alpha > 0)) | (~pos & (alpha < c))
    b_up = float(np.where(up, err, np.inf).min()) if up.any() else 0.0
    b_low = float(np.where(low, err, -np.inf).max()) if low.any() else 0.0
    bias = -0.5 * (b_up + b_low)
    return SmoResult(alpha=alpha, bias=bias, converged=converged,
                     iterations=iterations)


# ---------------------------------------------------------------------------
# Platt sigmoid on held-out decision values


def fit_sigmoid(deci: np.ndarray, y: np.ndarray, max_iter: int = 100) -> tuple[float, float]:
    """Fit p = 1/(1+exp(A*f+B)) to decision values by penalized ML."""
    prior1 = float((y > 0).sum())
    prior0 = float(len(y) - prior1)
    hi = (prior1 + 1.0) / (prior1 + 2.0)
    lo = 1.0 / (prior0 + 2.0)
    t = np.where(y > 0, hi, lo)
    a, b = 0.0, math.log((prior0 + 1.0) / (prior1 + 1.0))
    min_step, sigma = 1e-10, 1e-12

    def value(a_: float, b_: float) -> float:
        fapb = deci * a_ + b_
        pos = fapb >= 0
        out = np.where(
            pos,
            t * fapb + np.log1p(np.exp(-np.abs(fapb))),
            (t - 1.0) * fapb + np.log1p(np.exp(-np.abs(fapb))),
        )
        return float(out.sum())

    fval = value(a, b)
    for _ in range(max_iter):
        fapb = deci * a + b
        p = np.where(fapb >= 0, np.exp(-fapb) / (1.0 + np.exp(-fapb)),
                     1.0 / (1.0 + np.exp(fapb)))
        q = 1.0 - p
        d1 = t - p
        d2 = p * q
        g1 = float((deci * d1).sum())
        g2 = float(d1.sum())
        if abs(g1) < 1e-5 and abs(g2) < 1e-5:
            break
        h11 = float((deci * deci * d2).sum()) + sigma
        h22 = float(d2.sum()) + sigma
        h21 = float((deci * d2).sum())
        det = h11 * h22 - h21 * h21
        da = -(h22 * g1 - h21 * g2) / det
        db = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * da + g2 * db
        step = 1.0
        while step >= min_step:
            na, nb = a + step * da, b + step * db
            nval = value(na, nb)
            if nval < fval + 1e-4 * step * gd:
                a, b, fval = na, nb, nval
                break
            step /= 2.0
        else:
            break
    return a, b


def sigmoid_prob(deci: np.ndarray, a: float, b: float) -> np.ndarray:
    fapb = deci * a + b
    return np.where(fapb >= 0, np.exp(-fapb) / (1.0 + np.exp(-fapb)),
                    1.0 / (1.0 + np.exp(fapb)))


# ---------------------------------------------------------------------------
# the multi-class model


@dataclass(frozen=True)
class PairClassifier:
    pos_class: str
    neg_class: str
    support_x: np.ndarray
    coef: np.ndarray  # alpha_i * y_i for support vectors
    bias: float
    platt_a: float
    platt_b: float
    converged: bool

    def decision(self, x: np.ndarray, gamma: float) -> np.ndarray:
        k = rbf_kernel(x, self.support_x, gamma)
        return k @ self.coef + self.bias

    def prob_pos(self, x: np.ndarray, gamma: float) -> np.ndarray:
        return sigmoid_prob(self.decision(x, gamma), self.platt_a, self.platt_b)


@dataclass(frozen=True)
class SvmModel:
    classes: tuple[str, ...]
    pairs: tuple[PairClassifier, ...]
    gamma: float
    c: float

    @property
    def converged(self) -> bool:
        return all(p.converged for p in self.pairs)


@dataclass(frozen=True)
class EmotionDistribution:
    intensity: dict[str, float]

    def argmax(self) -> str:
        return max(self.intensity, key=self.intensity.get)  # type: ignore[arg-type]


@dataclass(frozen=True)
class CalibrationResult:
    c_mean: float
    c_var: float
    precision_curve: tuple[tuple[float, float], ...]
    achieved_precision_var: float = 0.0
    targets_key: str = ""


def train_svm(
    corpus: list[LabeledSample] | CorpusMatrix, c: float,
    kernel_bandwidth: float | None = None, seed: int = 0, platt_folds: int = 3,
) -> SvmModel:
    """One-vs-one SMO-trained classifiers plus held-out-fold sigmoids."""
    if c <= 0:
        raise ValueError("penalty c must be positive")
    if isinstance(corpus, CorpusMatrix):
        if kernel_bandwidth is not None and kernel_bandwidth != corpus.gamma:
            raise ValueError("kernel_bandwidth conflicts with prepacked corpus")
        mat = corpus
    else:
        mat = CorpusMatrix(corpus, kernel_bandwidth)
    pairs = []
    for ai in range(len(mat.classes)):
        for bi in range(ai + 1, len(mat.classes)):
            a, b = mat.classes[ai], mat.classes[bi]
            x, y, kernel = mat.pair(a, b)
            rng = np.random.default_rng(derive_seed(seed, f"platt:{a}:{b}"))
            deci, lab = _oof_decisions(x, y, kernel, c, platt_folds, rng)
            pa, pb = fit_sigmoid(deci, lab)
            solved = smo_solve(kernel, y, c)
            sv = solved.alpha > 1e-12
            pairs.append(PairClassifier(
                pos_class=a, neg_class=b,
                support_x=x[sv].copy(),
                coef=(solved.alpha * y)[sv].copy(),
                bias=solved.bias,
                platt_a=pa, platt_b=pb,
                converged=solved.converged,
            ))
    return SvmModel(classes=mat.classes, pairs=tuple(pairs), gamma=mat.gamma, c=c)


def _oof_decisions(x, y, kernel, c, folds, rng):
    """Decision values for every sample from a model that never saw it."""
    n = len(y)
    order = rng.permutation(n)
    deci = np.zeros(n)
    for fold in range(folds):
        held = order[fold::folds]
        mask = np.ones(n, dtype=bool)
        mask[held] = False
        sub = smo_solve(kernel[np.ix_(mask, mask)], y[mask], c)
        coef = sub.alpha * y[mask]
        deci[held] = kernel[np.ix_(held, mask)] @ coef + sub.bias
    return deci, y


def predict_intensities(model: SvmModel, v: AppraisalVector) -> EmotionDistribution:
    """Pairwise-coupled class probabilities for one appraisal vector."""
    x = np.array([v.as_tuple()], dtype=float)
    k = len(model.classes)
    idx = {c: i for i, c in enumerate(model.classes)}
    r = np.full((k, k), 0.5)
    for pair in model.pairs:
        p = float(np.clip(pair.prob_pos(x, model.gamma)[0], 1e-12, 1 - 1e-12))
        i, j = idx[pair.pos_class], idx[pair.neg_class]
        r[i, j] = p
        r[j, i] = 1.0 - p
    p = _couple(r)
    return EmotionDistribution({c: float(p[i]) for i, c in enumerate(model.classes)})


def _couple(r: np.ndarray) -> np.ndarray:
    """Least-squares pairwise coupling (linear system with sum-to-one)."""
    k = r.shape[0]
    q = np.zeros((k, k))
    for i in range(k):
        for j in range(k):
            if i == j:
                q[i, i] = sum(r[j2, i] ** 2 for j2 in range(k) if j2 != i)
            else:
                q[i, j] = -r[j, i] * r[i, j]
    aug = np.zeros((k + 1, k + 1))
    aug[:k, :k] = q
    aug[:k, k] = 1.0
    aug[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    try:
        sol = np.linalg.solve(aug, rhs)[:k]
    except np.linalg.LinAlgError:
        sol, *_ = np.linalg.lstsq(aug, rhs, rcond=None)
        sol = sol[:k]
    sol = np.clip(sol, 0.0, None)
    total = sol.sum()
    return sol / total if total > 0 else np.full(k, 1.0 / k)


def model_precision(
    model: SvmModel, targets: list[tuple[AppraisalVector, str]]
) -> float:
    """Mean intensity the model assigns to each target's labeled emotion."""
    if not targets:
        raise ValueError("no targets")
    return float(np.mean([
        predict_intensities(model, v).intensity[emotion] for v, emotion in targets
    ]))


# ---------------------------------------------------------------------------
# calibration against human precision


def calibrate_c(
    corpus: list[LabeledSample] | CorpusMatrix,
    targets: list[tuple[AppraisalVector, str]],
    human_precision_mean: float,
    human_precision_var: float,
    grid: list[float] | None = None,
    seed: int = 0,
) -> CalibrationResult:
    if grid is None:
        grid = default_grid()
    grid = sorted(grid)
    if len(grid) < 2 or grid[0] <= 0:
        raise ValueError("grid must contain >= 2 positive c values")
    if math.log10(grid[-1] / grid[0]) < 2:
        raise ValueError("grid must span at least two decades")
    if not 0.0 <= human_precision_mean <= 1.0:
        raise ValueError("precision must lie in [0, 1]")
    mat = corpus if isinstance(corpus, CorpusMatrix) else CorpusMatrix(corpus)
    curve = [
        (c, model_precision(train_svm(mat, c, seed=seed), targets)) for c in grid
    ]
    precs = [p for _, p in curve]
    lo, hi = min(precs), max(precs)
    if not lo <= human_precision_mean <= hi:
        raise CalibrationRangeError(
            f"target precision {human_precision_mean} outside achievable "
            f"range [{lo:.4f}, {hi:.4f}] for the probed grid"
        )
    c_mean = _interpolate_c(curve, human_precision_mean)
    c_var, achieved = _invert_variance(curve, c_mean, human_precision_var, seed)
    return CalibrationResult(
        c_mean=c_mean, c_var=c_var, precision_curve=tuple(curve),
        achieved_precision_var=achieved,
    )


def default_grid() -> list[float]:
    return [float(c) for c in np.logspace(-4, 1, 11)]


def _interpolate_c(curve: list[tuple[float, float]], target: float) -> float:
    best = min(range(len(curve)), key=lambda i: abs(curve[i][1] - target))
    # refine in log-c between the best point and whichever neighbor brackets
    for other in (best - 1, best + 1):
        if 0 <= other < len(curve):
            c0, p0 = curve[best]
            c1, p1 = curve[other]
            if (p0 - target) * (p1 - target) < 0 and p0 != p1:
                w = (target - p0) / (p1 - p0)
                return float(math.exp(
                    (1 - w) * math.log(c0) + w * math.log(c1)
                ))
    return curve[best][0]


def _curve_value(curve: list[tuple[float, float]], c: float) -> float:
    """Piecewise log-linear read of the measured precision curve."""
    cs = [math.log(x) for x, _ in curve]
    ps = [p for _, p in curve]
    lc = math.log(max(c, 1e-300))
    if lc <= cs[0]:
        return ps[0]
    if lc >= cs[-1]:
        return ps[-1]
    k = max(i for i in range(len(cs)) if cs[i] <= lc)
    if cs[k + 1] == cs[k]:
        return ps[k]
    w = (lc - cs[k]) / (cs[k + 1] - cs[k])
    return (1 - w) * ps[k] + w * ps[k + 1]


def _invert_variance(
    curve: list[tuple[float, float]], c_mean: float, target_var: float, seed: int,
    n_draws: int = 4001, rel_tol: float = 0.2,
) -> tuple[float, float]:
    """Find Var(c) such that precision spread under truncated-normal c
    draws matches the human precision variance (numerical, through the
    measured curve)."""
    if target_var <= 0:
        return 0.0, 0.0
    rng = np.random.default_rng(derive_seed(seed, "cvar"))
    draws = rng.standard_normal(n_draws)

    def achieved(sigma: float) -> float:
        cs = c_mean + sigma * draws
        cs = np.abs(cs)  # fold negatives back to positive (truncation)
        ps = np.array([_curve_value(curve, float(c)) for c in cs])
        return float(ps.var())

    lo, hi = 0.0, c_mean
    while achieved(hi) < target_var and hi < c_mean * 1e6:
        hi *= 4.0
    if achieved(hi) < target_var:
        var = achieved(hi)
        log.warning(
            "precision variance %.4g unreachable; best %.4g at sigma=%.4g",
            target_var, var, hi,
        )
        return hi * hi, var
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if achieved(mid) < target_var:
            lo = mid
        else:
            hi = mid
    sigma = 0.5 * (lo + hi)
    var = achieved(sigma)
    if target_var > 0 and abs(var - target_var) > rel_tol * target_var:
        log.warning(
            "precision variance match %.4g vs target %.4g beyond %d%%",
            var, target_var, int(rel_tol * 100),
        )
    return sigma * sigma, var


def sample_participants(
    cal: CalibrationResult, corpus: list[LabeledSample] | CorpusMatrix, n: int,
    seed: int = 0,
) -> list[SvmModel]:
    """One classifier per simulated participant, c drawn around c_mean."""
    if n < 1:
        raise ValueError("need at least one participant")
    mat = corpus if isinstance(corpus, CorpusMatrix) else CorpusMatrix(corpus)
    rng = np.random.default_rng(derive_seed(seed, "participants"))
    sd = math.sqrt(cal.c_var)
    models = []
    for k in range(n):
        c = cal.c_mean if sd == 0 else _draw_positive(rng, cal.c_mean, sd)
        models.append(train_svm(mat, c, seed=derive_seed(seed, f"participant:{k}")))
    return models


def _draw_positive(rng, mean: float, sd: float) -> float:
    for _ in range(1000):
        c = rng.normal(mean, sd)
        if c > 0:
            return float(c)
    return mean  # pathological sd; fall back to the center


# ---------------------------------------------------------------------------
# serialization


def model_to_json(model: SvmModel) -> str:
    doc = {
        "classes": list(model.classes),
        "gamma": model.gamma,
        "c": model.c,
        "pairs": [
            {
                "pos": p.pos_class,
                "neg": p.neg_class,
                "support_x": p.support_x.tolist(),
                "coef": p.coef.tolist(),
                "bias": p.bias,
                "platt_a": p.platt_a,
                "platt_b": p.platt_b,
                "converged": p.converged,
            }
            for p in model.pairs
        ],
    }
    return json.dumps(doc, separators=(",", ":"), sort_keys=True)


def model_from_json(text: str) -> SvmModel:
    doc = json.loads(text)
    pairs = tuple(
        PairClassifier(
            pos_class=p["pos"], neg_class=p["neg"],
            support_x=np.array(p["support_x"], dtype=float),
            coef=np.array(p["coef"], dtype=float),
            bias=float(p["bias"]),
            platt_a=float(p["platt_a"]), platt_b=float(p["platt_b"]),
            converged=bool(p["converged"]),
        )
        for p in doc["pairs"]
    )
    return SvmModel(
        classes=tuple(doc["classes"]), pairs=pairs,
        gamma=float(doc["gamma"]), c=float(doc["c"]),
    )

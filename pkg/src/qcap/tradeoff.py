"""Classical/quantum trade-off curves of a channel at a finite power level.

For a channel N and level l, an ensemble {p_x, psi_x} of pure states on
A^l tensor R yields per-use rates

    r_c = [S(avg N(rho_x)) - avg S(N(rho_x))] / l,
    r_q = avg [S(N(rho_x)) - S((N tensor id)(psi_x))] / l  (clamped at 0),

and the level-l trade-off curve is the upper concave envelope over ensembles
of the achievable (r_q, r_c) pairs, closed downward by its axis projections.
The scalarization max (1-t) r_c + t r_q is maximized by batched gradient
ascent over ensemble parameters (squared weights plus normalized complex
vectors).  Deterministic classical and maximally entangled starting points
pin the curve endpoints; random restarts and warm starts from neighboring
weights refine the interior.  Every returned point carries its witness
ensemble, and re-evaluating a witness reproduces the recorded rates.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .channels import QuantumChannel, channel_power
from .errors import NumericalFailureError, ValidationError
from .information import CQEnsemble, generalized_information
from .linalg import batched_entropy
from .optimize import best_of_starts
from .sampling import seed_rng

ENVELOPE_TOL = 1e-9


@dataclass(frozen=True)
class OptimizerOptions:
    """Budget knobs for ensemble optimization."""

    restarts: int = 24
    max_iters: int = 80
    seed: int = 0
    grad_step: float = 1e-5
    init_step: float = 0.3
    ftol: float = 1e-10


@dataclass(frozen=True, eq=False)
class CurvePoint:
    """One point of a trade-off curve; synthetic points carry no witness."""

    r_q: float
    r_c: float
    weight_t: float | None
    witness: CQEnsemble | None
    synthetic: bool


@dataclass(frozen=True, eq=False)
class ScalarizedResult:
    """Outcome of one scalarized maximization."""

    ensemble: CQEnsemble
    r_q: float
    r_c: float
    value: float
    weight_t: float
    fell_back: bool
    params: np.ndarray


@dataclass(frozen=True, eq=False)
class TradeoffCurve:
    """Concave trade-off frontier with witnessed and synthetic points."""

    level_l: int
    points: tuple[CurvePoint, ...]     # envelope vertices, ascending r_q
    achieved: tuple[CurvePoint, ...]   # one witnessed point per grid weight
    c_q_endpoint: float
    c_c_endpoint: float

    def value_at(self, r_q: float) -> float:
        """Piecewise-linear envelope value at ``r_q`` inside [0, c_q]."""
        xs = np.array([p.r_q for p in self.points])
        ys = np.array([p.r_c for p in self.points])
        if r_q < -1e-12 or r_q > self.c_q_endpoint + 1e-12:
            raise ValidationError(f"r_q = {r_q} outside [0, {self.c_q_endpoint}]")
        return float(np.interp(r_q, xs, ys))


class _EnsembleProblem:
    """Batched rate evaluation for parameterized ensembles on A^l."""

    def __init__(self, channel: QuantumChannel, l: int):
        power = channel_power(channel, l)
        self.level = l
        self.kraus = np.stack(power.kraus)
        self.d_a = power.dim_in
        self.d_b = power.dim_out
        self.d_r = power.dim_in
        self.n = self.d_a ** 2 + 2
        self.n_params = self.n + 2 * self.n * self.d_a * self.d_r
        per_row = self.n * len(self.kraus) * self.d_b * self.d_r * 16
        self.chunk = max(8, int(6e7 / max(per_row, 1)))

    def components(self, thetas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        thetas = np.asarray(thetas, dtype=float)
        b = thetas.shape[0]
        w = thetas[:, :self.n]
        wsq = w * w
        tot = wsq.sum(axis=1, keepdims=True)
        probs = np.where(tot > 1e-12, wsq / np.where(tot > 1e-12, tot, 1.0), 1.0 / self.n)
        raw = thetas[:, self.n:].reshape(b, self.n, 2, self.d_a * self.d_r)
        vec = raw[:, :, 0] + 1j * raw[:, :, 1]
        norm = np.linalg.norm(vec, axis=2, keepdims=True)
        anchor = np.zeros_like(vec)
        anchor[:, :, 0] = 1.0
        vec = np.where(norm > 1e-12, vec / np.where(norm > 1e-12, norm, 1.0), anchor)
        return probs, vec.reshape(b, self.n, self.d_a, self.d_r)

    def rates(self, thetas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Block (not per-use) values of (r_q, r_c) for a parameter batch."""
        probs, psi = self.components(thetas)
        phi = np.einsum("kba,xnar->xnkbr", self.kraus, psi)
        d_br = self.d_b * self.d_r
        sigma_br = np.einsum("xnkbr,xnkcs->xnbrcs", phi, phi.conj())
        sigma_br = sigma_br.reshape(len(probs), self.n, d_br, d_br)
        sigma_b = np.einsum("xnkbr,xnkcr->xnbc", phi, phi.conj())
        avg_b = np.einsum("xn,xnbc->xbc", probs, sigma_b)
        s_br = batched_entropy(sigma_br)
        s_b = batched_entropy(sigma_b)
        s_avg = batched_entropy(avg_b)
        r_c = s_avg - (probs * s_b).sum(axis=1)
        r_q = (probs * (s_b - s_br)).sum(axis=1)
        return r_q, r_c

    def ensemble_of(self, theta: np.ndarray) -> CQEnsemble:
        probs, psi = self.components(theta[None, :])
        return CQEnsemble(self.d_a, self.d_r, probs[0],
                          psi[0].reshape(self.n, self.d_a * self.d_r))

    def pack(self, weights: np.ndarray, vectors: np.ndarray) -> np.ndarray:
        raw = np.empty((self.n, 2, self.d_a * self.d_r))
        raw[:, 0] = vectors.real
        raw[:, 1] = vectors.imag
        return np.concatenate([np.asarray(weights, float), raw.reshape(-1)])

    def canonical_starts(self, rng: np.random.Generator) -> list[np.ndarray]:
        """Deterministic classical-basis and maximally entangled starts."""
        d_a, d_r, n = self.d_a, self.d_r, self.n
        rand = rng.normal(size=(2, n, d_a * d_r)) + 1j * rng.normal(size=(2, n, d_a * d_r))
        rand /= np.linalg.norm(rand, axis=2, keepdims=True)

        vecs = rand[0].copy()
        for i in range(min(d_a, n)):
            v = np.zeros(d_a * d_r, dtype=complex)
            v[(i % d_a) * d_r] = 1.0
            vecs[i] = v
        weights = np.where(np.arange(n) < d_a, 1.0, 0.05)
        classical = self.pack(weights, vecs)

        vecs = rand[1].copy()
        ent = np.zeros(d_a * d_r, dtype=complex)
        ent[:: d_r + 1][:d_a] = 1.0 / np.sqrt(d_a)
        vecs[0] = ent
        weights = np.where(np.arange(n) < 1, 1.0, 0.05)
        entangled = self.pack(weights, vecs)
        return [classical, entangled]

    def random_start(self, rng: np.random.Generator) -> np.ndarray:
        weights = np.abs(rng.normal(size=self.n)) + 0.2
        vectors = rng.normal(size=(self.n, self.d_a * self.d_r)) \
            + 1j * rng.normal(size=(self.n, self.d_a * self.d_r))
        vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
        return self.pack(weights, vectors)


def evaluate_point(ensemble: CQEnsemble, channel: QuantumChannel, l: int = 1) -> tuple[float, float]:
    """Per-use rates (r_q, r_c) of an ensemble on A^l; r_q clamped at zero.

    The ensemble size must not exceed dim(A^l)^2 + 2, matching the bound
    used by the optimizer.
    """
    power = channel_power(channel, l)
    bound = power.dim_in ** 2 + 2
    if ensemble.size > bound:
        raise ValidationError(
            f"ensemble has {ensemble.size} entries, bound for this level is {bound}")
    info = generalized_information(ensemble, power)
    return max(info.r_q, 0.0) / l, info.r_c / l


def _optimize(problem: _EnsembleProblem,
              combiner: Callable[[np.ndarray, np.ndarray], np.ndarray],
              opts: OptimizerOptions,
              extra_starts: Sequence[np.ndarray]) -> tuple[np.ndarray, float, bool]:
    def objective(thetas: np.ndarray) -> np.ndarray:
        r_q, r_c = problem.rates(thetas)
        return combiner(r_q, r_c)

    rng = seed_rng(opts.seed, "tradeoff")
    canonical = problem.canonical_starts(rng)
    starts = list(canonical)
    for extra in extra_starts:
        theta = np.asarray(extra, dtype=float)
        if theta.shape != (problem.n_params,):
            raise ValidationError("warm start has the wrong parameter shape")
        starts.append(theta)
    for _ in range(opts.restarts):
        starts.append(problem.random_start(rng))

    baseline = float(np.max(objective(np.stack(canonical))))
    results = best_of_starts(objective, starts, max_iters=opts.max_iters,
                             grad_step=opts.grad_step, init_step=opts.init_step,
                             ftol=opts.ftol, chunk=problem.chunk)
    values = np.array([v for _, v in results])
    best = int(np.argmax(values))
    fell_back = bool(values[best] <= baseline + 1e-12)
    return results[best][0], float(values[best]), fell_back


def optimize_scalarized(channel: QuantumChannel, l: int, t: float,
                        opts: OptimizerOptions | None = None,
                        extra_starts: Sequence[np.ndarray] = ()) -> ScalarizedResult:
    """Maximize (1 - t) r_c + t r_q over ensembles at level ``l``."""
    if not 0.0 <= t <= 1.0:
        raise ValidationError(f"scalarization weight {t} outside [0, 1]")
    opts = opts or OptimizerOptions()
    problem = _EnsembleProblem(channel, l)
    theta, _, fell_back = _optimize(
        problem, lambda rq, rc: (1.0 - t) * rc + t * rq, opts, extra_starts)
    ens = problem.ensemble_of(theta)
    r_q, r_c = evaluate_point(ens, channel, l)
    return ScalarizedResult(ensemble=ens, r_q=r_q, r_c=r_c,
                            value=(1.0 - t) * r_c + t * r_q,
                            weight_t=float(t), fell_back=fell_back, params=theta)


def default_t_grid(count: int = 21) -> np.ndarray:
    """Chebyshev-spaced scalarization weights on [0, 1], endpoints included."""
    k = np.arange(count)
    return 0.5 * (1.0 - np.cos(np.pi * k / (count - 1)))


def _upper_concave_envelope(raw: list[CurvePoint]) -> list[CurvePoint]:
    """Vertices of the upper concave envelope, ascending r_q."""
    best_at: dict[float, CurvePoint] = {}
    for p in raw:
        x = round(p.r_q, 12)
        cur = best_at.get(x)
        if cur is None or p.r_c > cur.r_c + 1e-12 or \
                (abs(p.r_c - cur.r_c) <= 1e-12 and cur.synthetic and not p.synthetic):
            best_at[x] = p
    pts = [best_at[x] for x in sorted(best_at)]
    stack: list[CurvePoint] = []
    for p in pts:
        while len(stack) >= 2:
            ax, ay = stack[-2].r_q, stack[-2].r_c
            bx, by = stack[-1].r_q, stack[-1].r_c
            cross = (bx - ax) * (p.r_c - ay) - (by - ay) * (p.r_q - ax)
            if cross >= -1e-14:
                stack.pop()
            else:
                break
        stack.append(p)
    return stack


def validate_envelope(points: Sequence[CurvePoint]) -> None:
    """Check the envelope is a function, non-increasing, and concave."""
    if not points:
        raise ValidationError("empty envelope")
    xs = np.array([p.r_q for p in points])
    ys = np.array([p.r_c for p in points])
    if np.any(np.diff(xs) <= 0) and len(points) > 1:
        raise NumericalFailureError("envelope r_q coordinates are not increasing")
    if np.any(np.diff(ys) > ENVELOPE_TOL):
        raise NumericalFailureError("envelope r_c is not non-increasing")
    if len(points) >= 3:
        slopes = np.diff(ys) / np.diff(xs)
        if np.any(np.diff(slopes) > ENVELOPE_TOL):
            raise NumericalFailureError("envelope is not concave")


def compute_curve(channel: QuantumChannel, l: int = 1,
                  t_grid: Sequence[float] | None = None,
                  opts: OptimizerOptions | None = None) -> TradeoffCurve:
    """Trace the level-``l`` trade-off curve over a scalarization grid.

    Neighboring grid points share warm starts, so the sweep is cheaper than
    independent maximizations.  The returned envelope includes synthetic
    axis-projection anchors when no witnessed point achieves them.
    """
    opts = opts or OptimizerOptions()
    if t_grid is None:
        grid = default_t_grid()
    else:
        grid = np.asarray(sorted(float(t) for t in t_grid))
        if grid.size < 2 or grid[0] != 0.0 or grid[-1] != 1.0:
            raise ValidationError("the weight grid must span 0 to 1 inclusive")
        if np.any(grid < 0) or np.any(grid > 1):
            raise ValidationError("scalarization weights must lie in [0, 1]")

    achieved: list[CurvePoint] = []
    warm: list[np.ndarray] = []
    for t in grid:
        res = optimize_scalarized(channel, l, float(t), opts, extra_starts=tuple(warm))
        warm = [res.params]
        achieved.append(CurvePoint(r_q=res.r_q, r_c=res.r_c, weight_t=float(t),
                                   witness=res.ensemble, synthetic=False))

    c_q = max(p.r_q for p in achieved)
    c_c = max(p.r_c for p in achieved)
    candidates = list(achieved)
    candidates.append(CurvePoint(r_q=0.0, r_c=c_c, weight_t=None, witness=None, synthetic=True))
    candidates.append(CurvePoint(r_q=c_q, r_c=0.0, weight_t=None, witness=None, synthetic=True))
    envelope = _upper_concave_envelope(candidates)
    validate_envelope(envelope)
    return TradeoffCurve(level_l=l, points=tuple(envelope), achieved=tuple(achieved),
                         c_q_endpoint=c_q, c_c_endpoint=c_c)

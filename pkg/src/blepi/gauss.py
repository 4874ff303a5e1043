"""Exact Gaussian entropy algebra and the log-det maximizer.

For Gaussian inputs the inequality objective

    f(Sigma) = sum_i d_i h(N(0, Sigma_i)) - sum_j c_j h(N(0, A_j Sigma A_j^T))

is a smooth function of the block-diagonal covariance Sigma, with
closed-form value and gradient.  ``solve_mg`` maximizes it over SPD
blocks by unconstrained quasi-Newton ascent on Cholesky factors
(log-parameterized diagonals), with multi-start and divergence
detection.  Perturbed variants add isotropic noise delta to the blocks
and epsilon to the images; paired and mixture evaluations cover the
two-copy rotation identity and auxiliary-variable averages.

Everything is in nats.  All value types are immutable; multi-start runs
are independent given the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.optimize

from .datum import Datum, Partition
from .subspace import ProductSubspace

__all__ = [
    "LOG_2PIE",
    "BlockCovariance",
    "PerturbationParams",
    "GaussianSolveResult",
    "GaussianPair",
    "GaussianMixture",
    "SolverOptions",
    "EscapeRay",
    "DegenerateImageError",
    "gaussian_entropy",
    "objective",
    "objective_perturbed",
    "gradient",
    "solve_mg",
    "divergence_probe",
    "ray_covariance",
    "pair_s",
    "rotate_pair",
    "mixture_s",
]

LOG_2PIE = math.log(2.0 * math.pi) + 1.0

_SYM_TOL = 1e-10


class DegenerateImageError(RuntimeError):
    """An image covariance A_j Sigma A_j^T is numerically singular, so the
    subtracted entropy term diverges to -infinity."""


def _check_spd(M: np.ndarray, what: str) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{what} must be square, got shape {M.shape}")
    if M.shape[0] == 0:
        return M
    if not np.allclose(M, M.T, atol=_SYM_TOL * max(1.0, np.abs(M).max())):
        raise ValueError(f"{what} is not symmetric")
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"{what} is not positive definite") from exc
    return M


@dataclass(frozen=True)
class BlockCovariance:
    """Block-diagonal SPD covariance Diag(Sigma_1, ..., Sigma_k)."""

    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        frozen = []
        for i, S in enumerate(self.blocks):
            S = np.array(_check_spd(S, f"covariance block {i}"))
            S.setflags(write=False)
            frozen.append(S)
        object.__setattr__(self, "blocks", tuple(frozen))

    @property
    def partition(self) -> Partition:
        return Partition(tuple(S.shape[0] for S in self.blocks))

    def full(self) -> np.ndarray:
        return scipy.linalg.block_diag(*self.blocks)

    def scaled(self, t: float) -> "BlockCovariance":
        return BlockCovariance(tuple(t * S for S in self.blocks))

    @staticmethod
    def identity(partition: Partition) -> "BlockCovariance":
        return BlockCovariance(tuple(np.eye(r) for r in partition.blocks))

    def to_dict(self) -> dict:
        return {"blocks": [[[float(x) for x in row] for row in S] for S in self.blocks]}


@dataclass(frozen=True)
class PerturbationParams:
    """Isotropic noise levels: delta added to blocks, epsilon to images."""

    epsilon: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        if self.epsilon < 0 or self.delta < 0:
            raise ValueError("perturbation levels must be nonnegative")


def _logdet_spd(M: np.ndarray, what: str) -> float:
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise DegenerateImageError(f"{what} is numerically singular") from exc
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def gaussian_entropy(cov) -> float:
    """Differential entropy of N(0, cov) in nats: 0.5 log((2 pi e)^d det cov).

    A 0 x 0 covariance returns 0 (entropy of a point mass in R^0).
    """
    cov = np.asarray(cov, dtype=float)
    if cov.ndim == 0:
        cov = cov.reshape(1, 1)
    d = cov.shape[0]
    if d == 0:
        return 0.0
    _check_spd(cov, "covariance")
    return 0.5 * (d * LOG_2PIE + _logdet_spd(cov, "covariance"))


def _image_cov(A: np.ndarray, full: np.ndarray) -> np.ndarray:
    M = A @ full @ A.T
    return 0.5 * (M + M.T)


def objective(datum: Datum, sigma: BlockCovariance) -> float:
    """Gaussian objective sum_i d_i h(Sigma_i) - sum_j c_j h(A_j Sigma A_j^T)."""
    if sigma.partition != datum.partition:
        raise ValueError("covariance blocks do not match the datum partition")
    full = sigma.full()
    val = 0.0
    for di, S in zip(datum.d, sigma.blocks):
        val += di * 0.5 * (S.shape[0] * LOG_2PIE + _logdet_spd(S, "block"))
    for cj, A in zip(datum.c, datum.maps):
        M = _image_cov(A, full)
        val -= cj * 0.5 * (M.shape[0] * LOG_2PIE + _logdet_spd(M, "image covariance"))
    return float(val)


def objective_perturbed(
    datum: Datum, sigma: BlockCovariance, p: PerturbationParams
) -> float:
    """Noise-smoothed objective: blocks get +delta I, images get +epsilon I."""
    if p.epsilon == 0.0 and p.delta == 0.0:
        return objective(datum, sigma)
    blocks = tuple(S + p.delta * np.eye(S.shape[0]) for S in sigma.blocks)
    full = scipy.linalg.block_diag(*blocks)
    val = 0.0
    for di, S in zip(datum.d, blocks):
        val += di * 0.5 * (S.shape[0] * LOG_2PIE + _logdet_spd(S, "block"))
    for cj, A in zip(datum.c, datum.maps):
        M = _image_cov(A, full) + p.epsilon * np.eye(A.shape[0])
        val -= cj * 0.5 * (M.shape[0] * LOG_2PIE + _logdet_spd(M, "image covariance"))
    return float(val)


def gradient(datum: Datum, sigma: BlockCovariance) -> tuple[np.ndarray, ...]:
    """Per-block symmetric gradient of the Gaussian objective.

    Block i:  0.5 d_i Sigma_i^{-1} - 0.5 [sum_j c_j A_j^T (A_j Sigma A_j^T)^{-1} A_j]_ii
    """
    if sigma.partition != datum.partition:
        raise ValueError("covariance blocks do not match the datum partition")
    full = sigma.full()
    n = datum.n
    T = np.zeros((n, n))
    for cj, A in zip(datum.c, datum.maps):
        M = _image_cov(A, full)
        try:
            cf = scipy.linalg.cho_factor(M, lower=True)
        except scipy.linalg.LinAlgError as exc:
            raise DegenerateImageError("image covariance is numerically singular") from exc
        T += cj * (A.T @ scipy.linalg.cho_solve(cf, A))
    grads = []
    for (start, stop), di, S in zip(datum.partition.offsets(), datum.d, sigma.blocks):
        try:
            cf = scipy.linalg.cho_factor(S, lower=True)
        except scipy.linalg.LinAlgError as exc:
            raise DegenerateImageError("covariance block is numerically singular") from exc
        Sinv = scipy.linalg.cho_solve(cf, np.eye(S.shape[0]))
        G = 0.5 * di * Sinv - 0.5 * T[start:stop, start:stop]
        grads.append(0.5 * (G + G.T))
    return tuple(grads)


# ---------------------------------------------------------------------------
# Cholesky-parameterized multi-start ascent
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SolverOptions:
    starts: int = 8
    tol: float = 1e-8            # gradient norm in the Cholesky parameters
    seed: int = 0
    blowup_threshold: float = 1e3   # nats above the Sigma = I value
    cond_threshold: float = 1e12
    max_iter: int = 5000
    probe_rays: int = 8


@dataclass(frozen=True)
class GaussianSolveResult:
    mg_value: float
    sigma_star: BlockCovariance
    converged: bool
    unbounded: bool
    starts_used: int
    gradient_norm: float

    def to_dict(self) -> dict:
        return {
            "mg_value": self.mg_value,
            "sigma_star": self.sigma_star.to_dict(),
            "converged": self.converged,
            "unbounded": self.unbounded,
            "starts_used": self.starts_used,
            "gradient_norm": self.gradient_norm,
        }


class _EvalFailure(Exception):
    pass


class _Blowup(Exception):
    def __init__(self, theta):
        self.theta = theta


class _Layout:
    """Packing of per-block lower-triangular factors into one flat vector.

    Strictly-lower entries are stored raw; diagonal entries are stored as
    logs, so every parameter vector maps to an SPD block covariance.
    """

    def __init__(self, partition: Partition):
        self.blocks = partition.blocks
        self.tril = [np.tril_indices(r) for r in self.blocks]
        self.sizes = [r * (r + 1) // 2 for r in self.blocks]
        self.total = sum(self.sizes)

    def split(self, theta: np.ndarray) -> list[np.ndarray]:
        out, pos = [], 0
        for s in self.sizes:
            out.append(theta[pos : pos + s])
            pos += s
        return out

    def factors(self, theta: np.ndarray) -> list[np.ndarray]:
        Ls = []
        for r, (rows, cols), part in zip(self.blocks, self.tril, self.split(theta)):
            L = np.zeros((r, r))
            L[rows, cols] = part
            idx = np.arange(r)
            L[idx, idx] = np.exp(L[idx, idx])
            Ls.append(L)
        return Ls

    def covariance(self, theta: np.ndarray) -> BlockCovariance:
        return BlockCovariance(tuple(L @ L.T for L in self.factors(theta)))

    def pack_grad(self, Ls, block_grads) -> np.ndarray:
        parts = []
        for L, G, (rows, cols) in zip(Ls, block_grads, self.tril):
            GL = 2.0 * (G @ L)
            idx = np.arange(L.shape[0])
            GL[idx, idx] *= L[idx, idx]  # chain rule through the log-diagonal
            parts.append(GL[rows, cols])
        return np.concatenate(parts) if parts else np.zeros(0)


def _value_grad(datum: Datum, layout: _Layout, theta: np.ndarray, cond_limit: float = 1e12):
    """Objective value and flat gradient at theta; raises _EvalFailure when an
    image covariance is degenerate (cond above the solver threshold)."""
    Ls = layout.factors(theta)
    blocks = [L @ L.T for L in Ls]
    full = scipy.linalg.block_diag(*blocks)
    n = datum.n
    diag_floor = cond_limit**-0.5  # Cholesky diag ratio ~ sqrt(cond)

    val = 0.0
    for di, L, r in zip(datum.d, Ls, layout.blocks):
        val += di * 0.5 * (r * LOG_2PIE + 2.0 * np.sum(np.log(np.diag(L))))
    T = np.zeros((n, n))
    for cj, A in zip(datum.c, datum.maps):
        M = _image_cov(A, full)
        try:
            cm = np.linalg.cholesky(M)
        except np.linalg.LinAlgError:
            raise _EvalFailure
        dg = np.diag(cm)
        if dg.min() <= 0 or dg.min() / dg.max() < diag_floor:
            raise _EvalFailure
        val -= cj * 0.5 * (M.shape[0] * LOG_2PIE + 2.0 * np.sum(np.log(dg)))
        W = scipy.linalg.cho_solve((cm, True), A)
        T += cj * (A.T @ W)

    block_grads = []
    for (start, stop), di, L in zip(datum.partition.offsets(), datum.d, Ls):
        r = L.shape[0]
        Sinv = scipy.linalg.cho_solve((L, True), np.eye(r))
        G = 0.5 * di * Sinv - 0.5 * T[start:stop, start:stop]
        block_grads.append(0.5 * (G + G.T))
    return float(val), layout.pack_grad(Ls, block_grads)


_THETA_WALL = 200.0  # keeps exp() finite; genuine optima sit far inside


def _newton_polish(datum, layout, theta, opts, steps=5):
    """Final gradient push for ill-conditioned optima.

    Near a boundary-flat maximizer the quasi-Newton loop stagnates once
    objective improvements fall below machine precision, while the
    gradient can still sit around 1e-8.  A few damped Newton steps on a
    finite-difference Hessian (cheap: a handful of parameters) drive the
    gradient the rest of the way down.
    """
    try:
        val, grad = _value_grad(datum, layout, theta, opts.cond_threshold)
    except _EvalFailure:
        return None
    p = len(theta)
    for _ in range(steps):
        gnorm = np.linalg.norm(grad)
        if gnorm <= opts.tol or p == 0:
            break
        h = 1e-6 * max(1.0, float(np.abs(theta).max()))
        H = np.zeros((p, p))
        try:
            for i in range(p):
                e = np.zeros(p)
                e[i] = h
                _, gp = _value_grad(datum, layout, theta + e, opts.cond_threshold)
                _, gm = _value_grad(datum, layout, theta - e, opts.cond_threshold)
                H[:, i] = (gp - gm) / (2 * h)
        except _EvalFailure:
            break
        H = 0.5 * (H + H.T)
        step, *_ = np.linalg.lstsq(H, -grad, rcond=1e-12)
        improved = False
        for scale in (1.0, 0.5, 0.25, 0.125):
            cand = theta + scale * step
            try:
                cval, cgrad = _value_grad(datum, layout, cand, opts.cond_threshold)
            except _EvalFailure:
                continue
            if np.linalg.norm(cgrad) < gnorm:
                theta, val, grad = cand, cval, cgrad
                improved = True
                break
        if not improved:
            break
    return theta, val, float(np.linalg.norm(grad))


def _run_start(datum, layout, theta0, f_ref, opts):
    def fun(theta):
        wall = np.abs(theta).max() - _THETA_WALL if theta.size else -1.0
        if wall > 0:
            g = np.zeros_like(theta)
            hot = np.abs(theta) > _THETA_WALL
            g[hot] = 2e4 * (np.abs(theta[hot]) - _THETA_WALL) * np.sign(theta[hot])
            return 1e4 * wall * wall, g
        try:
            val, grad = _value_grad(datum, layout, theta, opts.cond_threshold)
        except _EvalFailure:
            return 1e60, np.zeros_like(theta)
        if val - f_ref > opts.blowup_threshold:
            raise _Blowup(theta)
        return -val, -grad

    theta = theta0
    best = None
    # restarting from the endpoint resets the curvature memory, which
    # usually buys another order of magnitude on the gradient norm
    for _ in range(3):
        res = scipy.optimize.minimize(
            fun,
            theta,
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": opts.max_iter, "ftol": 1e-16, "gtol": 1e-12, "maxcor": 20},
        )
        theta = res.x
        try:
            val, grad = _value_grad(datum, layout, theta, opts.cond_threshold)
        except _EvalFailure:
            return best
        best = (theta, val, float(np.linalg.norm(grad)))
        if best[2] <= opts.tol:
            break
    if best is not None and best[2] > opts.tol:
        polished = _newton_polish(datum, layout, best[0], opts)
        if polished is not None and polished[2] < best[2]:
            best = polished
    return best


def solve_mg(datum: Datum, opts: SolverOptions = SolverOptions()) -> GaussianSolveResult:
    """Maximize the Gaussian objective over block covariances.

    Runs the divergence probe first; an escape ray short-circuits to an
    unbounded result.  Otherwise multi-start L-BFGS ascent on the
    Cholesky parameters, reporting the best run.  ``converged`` means the
    gradient norm (in the ascent parameters) fell below ``opts.tol``.
    """
    rng = np.random.default_rng(np.random.SeedSequence(opts.seed))
    ray = divergence_probe(datum, rng, n_random_rays=opts.probe_rays)
    layout = _Layout(datum.partition)
    if ray is not None:
        return GaussianSolveResult(
            mg_value=math.inf,
            sigma_star=ray_covariance(datum.partition, ray.direction, 2.0**10),
            converged=False,
            unbounded=True,
            starts_used=0,
            gradient_norm=math.inf,
        )

    f_ref, _ = _value_grad(datum, layout, np.zeros(layout.total), opts.cond_threshold)
    best = None
    starts_used = 0
    try:
        for s in range(max(1, opts.starts)):
            theta0 = (
                np.zeros(layout.total)
                if s == 0
                else rng.normal(0.0, 0.5, layout.total)
            )
            out = _run_start(datum, layout, theta0, f_ref, opts)
            starts_used += 1
            if out is None:
                continue
            theta, val, gnorm = out
            if best is None or val > best[1] + 1e-15 or (
                abs(val - best[1]) <= 1e-12 and gnorm < best[2]
            ):
                best = (theta, val, gnorm)
    except _Blowup as b:
        return GaussianSolveResult(
            mg_value=math.inf,
            sigma_star=layout.covariance(np.clip(b.theta, -_THETA_WALL, _THETA_WALL)),
            converged=False,
            unbounded=True,
            starts_used=starts_used + 1,
            gradient_norm=math.inf,
        )

    if best is None:
        return GaussianSolveResult(
            mg_value=math.nan,
            sigma_star=BlockCovariance.identity(datum.partition),
            converged=False,
            unbounded=False,
            starts_used=starts_used,
            gradient_norm=math.inf,
        )
    theta, val, gnorm = best
    return GaussianSolveResult(
        mg_value=val,
        sigma_star=layout.covariance(theta),
        converged=gnorm <= opts.tol,
        unbounded=False,
        starts_used=starts_used,
        gradient_norm=gnorm,
    )


# ---------------------------------------------------------------------------
# escape-ray divergence probe
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EscapeRay:
    direction: ProductSubspace
    gain: float  # objective increase over the last ten doublings


def ray_covariance(partition: Partition, V: ProductSubspace, lam: float) -> BlockCovariance:
    """Identity inflated by a factor lam along the product subspace V."""
    blocks = []
    for r, B in zip(partition.blocks, V.bases):
        blocks.append(np.eye(r) + (lam - 1.0) * (B @ B.T))
    return BlockCovariance(tuple(blocks))


_PROBE_STEPS = 20  # doublings; final scale 2^20 ~ 1e6
_PROBE_INC_TOL = 1e-5
_PROBE_GAIN_TOL = 1e-4


def _ray_escapes(datum: Datum, V: ProductSubspace) -> Optional[float]:
    vals = []
    for s in range(_PROBE_STEPS + 1):
        try:
            vals.append(objective(datum, ray_covariance(datum.partition, V, 2.0**s)))
        except DegenerateImageError:
            return None
    vals = np.asarray(vals)
    inc = np.diff(vals)[_PROBE_STEPS // 2 :]
    # genuine escapes grow linearly in log-scale: every late increment is
    # bounded away from zero, while bounded objectives have geometrically
    # decaying increments.
    if np.all(inc > _PROBE_INC_TOL) and float(np.sum(inc)) > _PROBE_GAIN_TOL:
        return float(np.sum(inc))
    return None


def divergence_probe(
    datum: Datum,
    rng: Optional[np.random.Generator] = None,
    n_random_rays: int = 8,
) -> Optional[EscapeRay]:
    """Search for a ray along which the objective grows without bound.

    Deterministic rays: the full space and each single full block.
    Random rays: product subspaces with random dimension profiles and
    Haar-random per-block bases.  Returns the first escaping ray found.
    """
    partition = datum.partition
    rays = [ProductSubspace.full(partition)]
    for i in range(partition.k):
        bases = [
            np.eye(r) if j == i else np.zeros((r, 0))
            for j, r in enumerate(partition.blocks)
        ]
        rays.append(ProductSubspace(tuple(bases)))
    if rng is not None:
        for _ in range(n_random_rays):
            while True:
                profile = [int(rng.integers(0, r + 1)) for r in partition.blocks]
                if sum(profile) > 0:
                    break
            bases = []
            for r, t in zip(partition.blocks, profile):
                if t == 0:
                    bases.append(np.zeros((r, 0)))
                else:
                    Q, _ = np.linalg.qr(rng.standard_normal((r, t)))
                    bases.append(Q[:, :t])
            rays.append(ProductSubspace(tuple(bases)))
    for V in rays:
        gain = _ray_escapes(datum, V)
        if gain is not None:
            return EscapeRay(direction=V, gain=gain)
    return None


# ---------------------------------------------------------------------------
# two-copy pairs and finite mixtures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianPair:
    """Joint covariance of two copies (X_1, X_2), one 2r_i x 2r_i SPD matrix
    per block, blocks independent across i.  Within block i the leading
    r_i coordinates belong to copy 1 and the trailing r_i to copy 2."""

    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        frozen = []
        for i, J in enumerate(self.blocks):
            J = np.array(_check_spd(J, f"pair block {i}"))
            if J.shape[0] % 2 != 0:
                raise ValueError(f"pair block {i} must have even dimension")
            J.setflags(write=False)
            frozen.append(J)
        object.__setattr__(self, "blocks", tuple(frozen))

    @property
    def partition(self) -> Partition:
        return Partition(tuple(J.shape[0] // 2 for J in self.blocks))

    def marginals(self) -> tuple[BlockCovariance, BlockCovariance]:
        firsts, seconds = [], []
        for J in self.blocks:
            r = J.shape[0] // 2
            firsts.append(J[:r, :r])
            seconds.append(J[r:, r:])
        return BlockCovariance(tuple(firsts)), BlockCovariance(tuple(seconds))

    @staticmethod
    def independent(first: BlockCovariance, second: BlockCovariance) -> "GaussianPair":
        blocks = tuple(
            scipy.linalg.block_diag(S1, S2)
            for S1, S2 in zip(first.blocks, second.blocks)
        )
        return GaussianPair(blocks)


def pair_s(datum: Datum, pair: GaussianPair, p: PerturbationParams) -> float:
    """Two-copy perturbed objective, evaluated in closed form.

    Block terms use the 2r_i x 2r_i joint covariances; image terms use
    the doubled maps Diag(A_j, A_j) acting on the (copy-1, copy-2)
    arrangement, plus the delta/epsilon noise.
    """
    if pair.partition != datum.partition:
        raise ValueError("pair blocks do not match the datum partition")
    r = datum.partition.blocks
    val = 0.0
    for di, J in zip(datum.d, pair.blocks):
        val += di * gaussian_entropy(J + p.delta * np.eye(J.shape[0]))
    C11 = scipy.linalg.block_diag(*(J[: rr, : rr] for J, rr in zip(pair.blocks, r)))
    C12 = scipy.linalg.block_diag(*(J[: rr, rr:] for J, rr in zip(pair.blocks, r)))
    C22 = scipy.linalg.block_diag(*(J[rr:, rr:] for J, rr in zip(pair.blocks, r)))
    dI = p.delta * np.eye(datum.n)
    for cj, A in zip(datum.c, datum.maps):
        nj = A.shape[0]
        eI = p.epsilon * np.eye(nj)
        J11 = A @ (C11 + dI) @ A.T + eI
        J22 = A @ (C22 + dI) @ A.T + eI
        J12 = A @ C12 @ A.T
        M = np.block([[J11, J12], [J12.T, J22]])
        val -= cj * gaussian_entropy(0.5 * (M + M.T))
    return float(val)


def rotate_pair(pair: GaussianPair) -> GaussianPair:
    """Joint law of ((X_1+X_2)/sqrt2, (X_1-X_2)/sqrt2); an involution."""
    blocks = []
    for J in pair.blocks:
        r = J.shape[0] // 2
        eye = np.eye(r)
        R = np.block([[eye, eye], [eye, -eye]]) / math.sqrt(2.0)
        blocks.append(R @ J @ R.T)
    return GaussianPair(tuple(blocks))


@dataclass(frozen=True)
class GaussianMixture:
    """Finite mixture of block covariances (the conditional laws given an
    auxiliary variable).  The component count is capped at
    sum_i r_i (r_i + 1) / 2 + 1, which suffices for any conditional
    covariance profile."""

    weights: np.ndarray
    components: tuple[BlockCovariance, ...]

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or len(w) != len(self.components):
            raise ValueError("weights and components must align")
        if len(self.components) == 0:
            raise ValueError("mixture needs at least one component")
        if np.any(w <= 0):
            raise ValueError("mixture weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"mixture weights sum to {w.sum()!r}, not 1")
        parts = {comp.partition for comp in self.components}
        if len(parts) != 1:
            raise ValueError("mixture components have inconsistent partitions")
        partition = next(iter(parts))
        cap = sum(r * (r + 1) // 2 for r in partition.blocks) + 1
        if len(self.components) > cap:
            raise ValueError(
                f"{len(self.components)} components exceed the cap {cap} for this partition"
            )
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def partition(self) -> Partition:
        return self.components[0].partition


def mixture_s(datum: Datum, mix: GaussianMixture, p: PerturbationParams) -> float:
    """Auxiliary-averaged perturbed objective: the weighted sum of the
    perturbed objective over mixture components."""
    if mix.partition != datum.partition:
        raise ValueError("mixture blocks do not match the datum partition")
    return float(
        sum(
            w * objective_perturbed(datum, comp, p)
            for w, comp in zip(mix.weights, mix.components)
        )
    )

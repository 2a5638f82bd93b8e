"""Partial-CSIT bounds on the sub-6 rate and the per-eigenmode power fixed point.

The transmitter knows only the compound set ``S`` (a rank-one LOS mean
plus a perturbation of spectral norm at most ``epsilon``).  Two surrogate
rate functions are provided:

* a worst-case lower bound, attained by the rank-one channel
  ``H* = (sqrt(lam) - eps)^+ v u^H`` with a unit-rank covariance along ``u``;
* an upper bound on the expected rate, ``W log det(I + K Sigma / W)`` with
  the equivalent covariance ``Sigma = E[H^H H]``.

Both reduce to the per-mode gain form used by the sum-rate solver.
"""
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .channel import worst_case_channel
from .sumrate import Problem, SolveMode, solve_problem

MIN_MC_SAMPLES = 1000
FIXED_POINT_MAX_ITER = 500


class CovarianceMode(enum.Enum):
    UNIFORM = "Uniform"
    UNIT_RANK = "UnitRank"
    EIGEN_POWERS = "EigenPowers"


class Bound(enum.Enum):
    LOWER = "lower"
    UPPER = "upper"


@dataclass(frozen=True)
class Sub6Covariance:
    """Transmit covariance of the sub-6 array.

    ``EigenPowers`` puts ``antenna_powers[i]`` on column ``i`` of ``basis``
    (the eigenvectors of the equivalent covariance).
    """

    mode: CovarianceMode
    total_power: float
    n_t: int
    q: np.ndarray = None
    antenna_powers: np.ndarray = None
    basis: np.ndarray = None

    def __post_init__(self):
        if self.total_power < 0:
            raise ValueError("total_power must be nonnegative")
        if self.mode is CovarianceMode.UNIT_RANK:
            q = np.array(self.q, dtype=np.complex128).ravel()
            if q.size != self.n_t or abs(np.linalg.norm(q) - 1.0) > 1e-12:
                raise ValueError("UnitRank covariance needs a unit vector q of length n_t")
            object.__setattr__(self, "q", q)
        elif self.mode is CovarianceMode.EIGEN_POWERS:
            p = np.array(self.antenna_powers, dtype=float).ravel()
            if p.size != self.n_t or np.any(p < 0):
                raise ValueError("EigenPowers needs n_t nonnegative powers")
            if abs(p.sum() - self.total_power) > 1e-9 * max(self.total_power, 1e-300):
                raise ValueError("antenna powers must sum to total_power")
            basis = np.eye(self.n_t) if self.basis is None else self.basis
            object.__setattr__(self, "antenna_powers", p)
            object.__setattr__(self, "basis", np.asarray(basis, dtype=np.complex128))

    def matrix(self):
        if self.mode is CovarianceMode.UNIFORM:
            return self.total_power / self.n_t * np.eye(self.n_t, dtype=np.complex128)
        if self.mode is CovarianceMode.UNIT_RANK:
            return self.total_power * np.outer(self.q, self.q.conj())
        b = self.basis
        return (b * self.antenna_powers) @ b.conj().T


def uniform_covariance(n_t, total_power):
    return Sub6Covariance(CovarianceMode.UNIFORM, total_power, n_t)


def unit_rank_covariance(q, total_power):
    q = np.asarray(q, dtype=np.complex128).ravel()
    return Sub6Covariance(CovarianceMode.UNIT_RANK, total_power, q.size, q=q)


def worst_case_covariance(model, total_power):
    """Unit-rank covariance along ``u``: ``H*^H H*`` is proportional to ``u u^H``."""
    return unit_rank_covariance(model.u, total_power)


def _as_matrix(cov):
    return cov.matrix() if isinstance(cov, Sub6Covariance) else np.asarray(cov, dtype=np.complex128)


def channel_rate(h, cov, w):
    """``w log det(I + H K H^H / w)`` in nats/s for any channel and covariance."""
    if w <= 0:
        return 0.0
    h = np.asarray(getattr(h, "entries", h), dtype=np.complex128)
    k = _as_matrix(cov)
    m = np.eye(h.shape[0]) + h @ k @ h.conj().T / w
    sign, logdet = np.linalg.slogdet(m)
    return float(w * logdet)


def lower_bound_rate(model, cov, w):
    """Rate of the worst channel ``H*`` under covariance ``cov`` (nats/s).

    ``H* K H*^H = kappa (u^H K u) v v^H``, so the bound is
    ``w ln(1 + kappa u^H K u / w)`` with ``kappa = [(sqrt(lam) - eps)^+]^2``;
    for the unit-rank covariance along ``u`` this is ``kappa * total_power``.
    """
    if w <= 0:
        return 0.0
    k = _as_matrix(cov)
    focus = float(np.real(model.u.conj() @ k @ model.u))
    return float(w * math.log1p(model.worst_gain() * max(focus, 0.0) / w))


def equivalent_covariance(model):
    """``E[H^H H] = Hbar^H Hbar + n_r sigma_e2 I`` for i.i.d. perturbation entries."""
    hbar = model.mean_channel()
    return hbar.conj().T @ hbar + model.n_r * model.sigma_e2 * np.eye(model.n_t)


def _psd_sqrt(k):
    vals, vecs = np.linalg.eigh(k)
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.conj().T


def upper_bound_rate(model, cov, w):
    """``w log det(I + K Sigma / w)`` via the eigenvalues of ``K^(1/2) Sigma K^(1/2)``."""
    if w <= 0:
        return 0.0
    root = _psd_sqrt(_as_matrix(cov))
    vals = np.linalg.eigvalsh(root @ equivalent_covariance(model) @ root)
    return float(w * np.log1p(np.clip(vals, 0.0, None) / w).sum())


def sigma_eigen(model):
    """Descending eigenvalues and eigenvectors of the equivalent covariance."""
    vals, vecs = np.linalg.eigh(equivalent_covariance(model))
    order = np.argsort(vals)[::-1]
    return np.clip(vals[order], 0.0, None), vecs[:, order]


@dataclass
class FixedPointState:
    p: np.ndarray
    e_values: np.ndarray
    mc_samples: int
    residual: float
    iterations: int = 0
    converged: bool = True
    warning: str = ""
    sums: list = field(default_factory=list)


def draw_z(n_r, n_t, mc_samples, seed, shifts=True):
    """Common random numbers: CN(0, 1) draws of shape (samples, n_r, n_t).

    With ``shifts`` each base draw is accompanied by its ``n_t`` cyclic
    column shifts (``ceil(mc_samples / n_t)`` base draws).  The columns are
    i.i.d., so this leaves every marginal unchanged while making the sample
    set exchangeable across columns: equal eigenvalues then give exactly
    equal ``E_i`` at equal powers.
    """
    rng = np.random.default_rng(seed)
    base = -(-mc_samples // n_t) if shifts else mc_samples
    shape = (base, n_r, n_t)
    z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
    if shifts and n_t > 1:
        z = np.concatenate([np.roll(z, k, axis=2) for k in range(n_t)], axis=0)
    return z


def e_values(p, sigmas, z):
    """Monte-Carlo ``E_i(p)``: the partial derivatives of the expected rate."""
    c = p * sigmas
    q = kernels.downdate_forms(z, c)
    return (sigmas * q / (1.0 + p * sigmas * q)).mean(axis=0)


def expected_rate(p, sigmas, z):
    """Monte-Carlo ``E log det(I + Z diag(p sigma) Z^H)`` (nats per hertz)."""
    m = np.einsum("srk,k,sqk->srq", z, p * sigmas, z.conj())
    m += np.eye(z.shape[1])[None]
    return float(np.linalg.slogdet(m)[1].mean())


def fixed_point_on_sigma(sigmas, n_r, total_power, mc_samples=4000, tol=1e-6, seed=0,
                         max_iter=FIXED_POINT_MAX_ITER, z=None):
    """Iterate ``p_i <- p_i E_i(p) / sum_j p_j E_j(p) * P`` from uniform powers.

    ``sigmas`` are the eigenvalues of the equivalent covariance.  The same
    Gaussian samples are reused every iteration, so the recursion is
    deterministic for a given seed.  ``residual`` is the largest change of
    any ``p_i`` relative to ``total_power``.
    """
    sigmas = np.asarray(sigmas, dtype=float).ravel()
    n_t = sigmas.size
    if mc_samples < MIN_MC_SAMPLES:
        raise ValueError(f"mc_samples must be >= {MIN_MC_SAMPLES}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    p = np.full(n_t, total_power / n_t)
    if n_t == 1 or total_power <= 0:
        return FixedPointState(p, np.zeros(n_t), mc_samples, 0.0, sums=[p.sum()])
    if z is None:
        z = draw_z(n_r, n_t, mc_samples, seed)
    best = None
    state = FixedPointState(p, np.zeros(n_t), mc_samples, math.inf, sums=[p.sum()])
    for it in range(1, max_iter + 1):
        e = e_values(p, sigmas, z)
        weighted = p * e
        total = weighted.sum()
        if not total > 0:
            break
        new = weighted / total * total_power
        resid = float(np.abs(new - p).max() / total_power)
        p = new
        state.p, state.e_values, state.residual, state.iterations = p, e, resid, it
        state.sums.append(p.sum())
        if best is None or resid < best[1]:
            best = (p.copy(), resid, e, it)
        if resid <= tol:
            return state
    state.converged = False
    state.warning = f"fixed point not converged after {state.iterations} iterations"
    if best is not None:
        state.p, state.residual, state.e_values, state.iterations = best
    return state


def fixed_point_powers(model, total_power, mc_samples=4000, tol=1e-6, seed=0,
                       max_iter=FIXED_POINT_MAX_ITER):
    """Per-eigenmode powers of the equivalent covariance for the expected rate."""
    sigmas, _ = sigma_eigen(model)
    return fixed_point_on_sigma(sigmas, model.n_r, total_power, mc_samples, tol, seed, max_iter)


def solve_with_csit(model, link, params, bound, mc_samples=1000, seed=0, tol=1e-4,
                    mode=SolveMode.AUTO):
    """Sum-rate solve with the sub-6 rate replaced by a partial-CSIT bound.

    ``Lower`` uses the worst channel with the unit-rank covariance along
    ``u`` (a single mode of gain ``kappa``).  ``Upper`` solves once with
    uniform power over the eigenmodes of ``Sigma``, runs the fixed point at
    the resulting per-hertz power and solves again with those fractions.
    """
    bound = Bound(bound)
    if bound is Bound.LOWER:
        prob = Problem(np.array([model.worst_gain()]), float(link.gain_A), params)
        rep = solve_problem(prob, mode)
        cov = worst_case_covariance(model, rep.allocation.p_sub6)
        rep.extras.update(bound="lower", covariance=cov, worst_channel=worst_case_channel(model))
        return rep
    sigmas, vecs = sigma_eigen(model)
    fractions = np.full(sigmas.size, 1.0 / sigmas.size)
    rep = solve_problem(Problem(sigmas * fractions, float(link.gain_A), params), mode)
    state = None
    alloc = rep.allocation
    if alloc.sub6_active and alloc.p_sub6 > 0 and sigmas.size > 1:
        state = fixed_point_on_sigma(
            sigmas, model.n_r, alloc.p_sub6 / alloc.w_sub6, mc_samples, tol, seed
        )
        fractions = state.p / state.p.sum()
        rep = solve_problem(Problem(sigmas * fractions, float(link.gain_A), params), mode)
        if state.warning:
            rep.warnings.append(state.warning)
    p_s = rep.allocation.p_sub6
    cov = Sub6Covariance(CovarianceMode.EIGEN_POWERS, p_s, sigmas.size,
                         antenna_powers=fractions * p_s, basis=vecs)
    rep.extras.update(bound="upper", covariance=cov, fixed_point=state, sigmas=sigmas)
    return rep

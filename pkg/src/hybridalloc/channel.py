"""Sub-6 GHz channel matrices, mmWave beamformed gains and the partial-CSIT set."""
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Sub6Channel:
    """Complex ``n_r x n_t`` channel with its descending singular values."""

    entries: np.ndarray
    singular_values: np.ndarray = field(default=None)

    def __post_init__(self):
        h = np.array(self.entries, dtype=np.complex128)
        if h.ndim != 2:
            raise ValueError("channel entries must be a 2-D matrix")
        h.setflags(write=False)
        object.__setattr__(self, "entries", h)
        if self.singular_values is None:
            sv = singular_values(h)
        else:
            sv = np.array(self.singular_values, dtype=float)
        sv.setflags(write=False)
        object.__setattr__(self, "singular_values", sv)

    @property
    def n_r(self):
        return self.entries.shape[0]

    @property
    def n_t(self):
        return self.entries.shape[1]

    def mode_gains(self):
        """Per-eigenmode gains ``lambda_i^2 / n_t`` of the uniform-covariance rate."""
        return self.singular_values**2 / self.n_t


@dataclass(frozen=True)
class MmWaveLink:
    """Analog-beamformed mmWave link, reduced to the power gain ``A``."""

    gain_A: float

    def __post_init__(self):
        if not (self.gain_A >= 0 and math.isfinite(self.gain_A)):
            raise ValueError(f"mmWave gain must be finite and >= 0, got {self.gain_A}")


@dataclass(frozen=True)
class CsitModel:
    """Compound set ``{lam^(1/2) v u^H + dH : ||dH||_2 <= epsilon}``.

    ``sigma_e2`` is the per-entry variance of the perturbation.
    """

    los_gain: float
    u: np.ndarray
    v: np.ndarray
    epsilon: float = 0.0
    sigma_e2: float = 0.0

    def __post_init__(self):
        u = np.array(self.u, dtype=np.complex128).ravel()
        v = np.array(self.v, dtype=np.complex128).ravel()
        for name, vec in (("u", u), ("v", v)):
            if abs(np.linalg.norm(vec) - 1.0) > 1e-12:
                raise ValueError(f"{name} must be a unit vector")
        if self.los_gain < 0 or self.epsilon < 0 or self.sigma_e2 < 0:
            raise ValueError("los_gain, epsilon and sigma_e2 must be nonnegative")
        u.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def n_t(self):
        return self.u.size

    @property
    def n_r(self):
        return self.v.size

    def mean_channel(self):
        return math.sqrt(self.los_gain) * np.outer(self.v, self.u.conj())

    def worst_gain(self):
        """``[(lam^(1/2) - epsilon)^+]^2``, the only nonzero eigenvalue of ``H*^H H*``."""
        return max(0.0, math.sqrt(self.los_gain) - self.epsilon) ** 2


def singular_values(matrix):
    """Descending singular values of a finite complex matrix."""
    h = np.asarray(matrix, dtype=np.complex128)
    if not np.all(np.isfinite(h)):
        raise ValueError("channel matrix has non-finite entries")
    if h.size == 0:
        return np.zeros(0)
    return np.linalg.svd(h, compute_uv=False)


def _complex_gaussian(rng, shape, variance=1.0):
    scale = math.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def generate_rayleigh(n_t, n_r, seed, gain=1.0):
    """i.i.d. CN(0, gain) channel; ``gain`` folds path loss over noise density."""
    if n_t < 1 or n_r < 1:
        raise ValueError("antenna counts must be >= 1")
    rng = np.random.default_rng(seed)
    return Sub6Channel(_complex_gaussian(rng, (n_r, n_t), gain))


def generate_mmwave_gain(n_t, n_r, seed, gain=1.0, k_factor=10.0):
    """Beamformed gain ``gain * n_t * n_r * |h|^2`` for a Rician scalar ``h``.

    The array factor ``n_t * n_r`` models ideal analog beam alignment.
    """
    if n_t < 1 or n_r < 1:
        raise ValueError("antenna counts must be >= 1")
    rng = np.random.default_rng(seed)
    los = math.sqrt(k_factor / (k_factor + 1.0))
    nlos = _complex_gaussian(rng, (), 1.0 / (k_factor + 1.0))
    return MmWaveLink(gain * n_t * n_r * abs(los + nlos) ** 2)


def random_unit_vector(rng, n):
    x = _complex_gaussian(rng, (n,))
    return x / np.linalg.norm(x)


def random_csit_model(n_t, n_r, seed, los_gain=1.0, epsilon=0.0, sigma_e2=0.0):
    """CsitModel with uniformly random LOS directions ``u`` and ``v``."""
    rng = np.random.default_rng(seed)
    return CsitModel(
        los_gain, random_unit_vector(rng, n_t), random_unit_vector(rng, n_r),
        epsilon, sigma_e2,
    )


def sample_compound_channel(model, seed):
    """Draw ``H = Hbar + dH`` from the compound set.

    ``dH`` has i.i.d. CN(0, sigma_e2) entries and is scaled down only when
    its spectral norm exceeds ``epsilon``.
    """
    rng = np.random.default_rng(seed)
    dh = _complex_gaussian(rng, (model.n_r, model.n_t), model.sigma_e2)
    norm = np.linalg.norm(dh, 2) if dh.size else 0.0
    if norm > model.epsilon:
        dh *= model.epsilon / norm
    return Sub6Channel(model.mean_channel() + dh)


def worst_case_channel(model):
    """Rank-one ``H* = (lam^(1/2) - eps)^+ v u^H`` minimizing the rate over the set."""
    amp = max(0.0, math.sqrt(model.los_gain) - model.epsilon)
    return Sub6Channel(amp * np.outer(model.v, model.u.conj()))


def _format_complex(x):
    return f"{x.real:.17g}{x.imag:+.17g}j"


def write_matrix(path, matrix):
    """Write a complex matrix: header ``n_r n_t`` then one row per line."""
    h = np.asarray(matrix, dtype=np.complex128)
    lines = [f"{h.shape[0]} {h.shape[1]}"]
    lines += [" ".join(_format_complex(x) for x in row) for row in h]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_matrix(path):
    """Parse the plain-text format produced by :func:`write_matrix`."""
    with open(path) as fh:
        rows = [ln.split() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows or len(rows[0]) != 2:
        raise ValueError(f"{path}: first line must be 'n_r n_t'")
    n_r, n_t = int(rows[0][0]), int(rows[0][1])
    body = rows[1:]
    if len(body) != n_r or any(len(r) != n_t for r in body):
        raise ValueError(f"{path}: expected {n_r} rows of {n_t} entries")
    return np.array([[complex(tok) for tok in r] for r in body], dtype=np.complex128)


def load_channel(path):
    return Sub6Channel(read_matrix(path))

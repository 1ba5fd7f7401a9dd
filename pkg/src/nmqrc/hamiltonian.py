"""Random spin-register Hamiltonians with a system block and an environment block.

Sites 0..n_sys-1 form the measured system, sites n_sys..n-1 the unmeasured
environment. Intra-block pairs couple through X_i X_j, the two blocks couple
through Z_i Z_k, and each block sees a uniform Z field:

    H = sum_{i<j} Jsys_ij X_i X_j + h_sys sum_i Z_i
      + sum_{k<l} Jenv_kl X_k X_l + h_env sum_k Z_k
      + sum_{i,k} g_ik Z_i Z_k

Couplings are drawn uniformly, Jsys in [-j0, j0], Jenv in [-alpha*j0,
alpha*j0], g in [-beta*j0, beta*j0]: alpha sets how fast the environment
mixes internally, beta how strongly the blocks talk. Sampling uses numpy's
PCG64 generator seeded from ``params.seed``; draws happen in a fixed order
(system pairs i<j lexicographic, environment pairs k<l lexicographic, then
g row-major over (i, k)) so a seed maps to a stable realization.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from . import linalg
from .errors import ConfigError
from .linalg import HermitianEigen, hermitian_eig, propagator_from_eigen

PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
IDENTITY_2 = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class ReservoirParams:
    """Register layout, coupling scales and RNG seed for one realization."""

    n_sys: int
    n_env: int
    alpha: float
    beta: float
    h_sys: float
    h_env: float
    seed: int
    j0: float = 1.0

    def __post_init__(self):
        if self.n_sys < 1:
            raise ConfigError(f"n_sys must be >= 1, got {self.n_sys}")
        if self.n_env < 0:
            raise ConfigError(f"n_env must be >= 0, got {self.n_env}")
        if self.n_sys + self.n_env > linalg.MAX_QUBITS:
            raise ConfigError(
                f"register n_sys + n_env = {self.n_sys + self.n_env} exceeds "
                f"the {linalg.MAX_QUBITS}-qubit cap"
            )
        if not (np.isfinite(self.j0) and self.j0 > 0):
            raise ConfigError(f"j0 must be finite and > 0, got {self.j0}")
        for name in ("alpha", "beta"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value >= 0):
                raise ConfigError(f"{name} must be finite and >= 0, got {value}")
        for name in ("h_sys", "h_env"):
            if not np.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")

    @property
    def n_qubits(self) -> int:
        return self.n_sys + self.n_env

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class CouplingSet:
    """Sampled couplings: j_sys over system pairs, j_env over environment
    pairs (both in i<j order), g as an (n_sys, n_env) array."""

    j_sys: np.ndarray
    j_env: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "j_sys", _frozen(np.ravel(self.j_sys)))
        object.__setattr__(self, "j_env", _frozen(np.ravel(self.j_env)))
        object.__setattr__(self, "g", _frozen(np.atleast_2d(self.g)))


def sample_couplings(params: ReservoirParams, rng: np.random.Generator | None = None) -> CouplingSet:
    """Draw a coupling realization; ``rng`` defaults to PCG64 seeded with params.seed."""
    if rng is None:
        rng = np.random.default_rng(params.seed)
    j0 = params.j0
    j_sys = rng.uniform(-j0, j0, size=comb(params.n_sys, 2))
    j_env = rng.uniform(-params.alpha * j0, params.alpha * j0, size=comb(params.n_env, 2))
    g = rng.uniform(-params.beta * j0, params.beta * j0, size=(params.n_sys, params.n_env))
    return CouplingSet(j_sys=j_sys, j_env=j_env, g=g)


def _embed(factors: dict[int, np.ndarray], n: int) -> np.ndarray:
    """kron over the register with identity at every site not in ``factors``."""
    out = np.ones((1, 1), dtype=complex)
    for q in range(n):
        out = linalg.kron(out, factors.get(q, IDENTITY_2))
    return out


def embed_pauli(axis: str, qubit: int, n: int) -> np.ndarray:
    """I x ... x sigma^axis x ... x I with sigma at register position ``qubit``."""
    axis = axis.upper()
    if axis not in PAULI:
        raise ValueError(f"axis must be one of X, Y, Z, got {axis!r}")
    if not 0 <= qubit < n:
        raise ValueError(f"qubit {qubit} out of range for a {n}-qubit register")
    return _embed({qubit: PAULI[axis]}, n)


class HamiltonianRealization:
    """A sampled Hamiltonian plus cached spectral data.

    The eigendecomposition is computed once on first use; propagators for
    any time step are then assembled in O(dim^2). Instances are treated as
    immutable and are safe to share across trajectory runs.
    """

    def __init__(self, params: ReservoirParams, couplings: CouplingSet, h_full: np.ndarray):
        self.params = params
        self.couplings = couplings
        h_full = np.asarray(h_full, dtype=complex)
        h_full.flags.writeable = False
        self.h_full = h_full
        self._eigen: HermitianEigen | None = None
        self._propagators: dict[float, np.ndarray] = {}
        self._engines: dict = {}

    @property
    def eigen(self) -> HermitianEigen:
        if self._eigen is None:
            self._eigen = hermitian_eig(self.h_full)
        return self._eigen

    def propagator(self, dt: float) -> np.ndarray:
        """exp(-i H dt), cached per dt."""
        if dt <= 0:
            raise ValueError(f"propagator time step must be > 0, got {dt}")
        u = self._propagators.get(dt)
        if u is None:
            u = propagator_from_eigen(self.eigen, dt)
            u.flags.writeable = False
            self._propagators[dt] = u
        return u

    def __getstate__(self):
        # Caches hold derived data only; drop them so workers re-derive.
        return {"params": self.params, "couplings": self.couplings, "h_full": self.h_full}

    def __setstate__(self, state):
        self.__init__(state["params"], state["couplings"], state["h_full"])


def build_hamiltonian(params: ReservoirParams, couplings: CouplingSet | None = None) -> HamiltonianRealization:
    """Assemble the full-register Hamiltonian from a coupling realization."""
    if couplings is None:
        couplings = sample_couplings(params)
    _check_couplings(params, couplings)
    n, n_sys = params.n_qubits, params.n_sys
    d = params.dim
    h = np.zeros((d, d), dtype=complex)
    x, z = PAULI["X"], PAULI["Z"]
    for idx, (i, j) in enumerate(combinations(range(n_sys), 2)):
        h += couplings.j_sys[idx] * _embed({i: x, j: x}, n)
    for i in range(n_sys):
        h += params.h_sys * _embed({i: z}, n)
    for idx, (k, l) in enumerate(combinations(range(params.n_env), 2)):
        h += couplings.j_env[idx] * _embed({n_sys + k: x, n_sys + l: x}, n)
    for k in range(params.n_env):
        h += params.h_env * _embed({n_sys + k: z}, n)
    for i in range(n_sys):
        for k in range(params.n_env):
            h += couplings.g[i, k] * _embed({i: z, n_sys + k: z}, n)
    return HamiltonianRealization(params, couplings, h)


def _check_couplings(params: ReservoirParams, couplings: CouplingSet) -> None:
    expect = (comb(params.n_sys, 2), comb(params.n_env, 2), (params.n_sys, params.n_env))
    got = (couplings.j_sys.shape[0], couplings.j_env.shape[0], couplings.g.shape)
    if params.n_env == 0 and couplings.g.size == 0:
        got = (got[0], got[1], expect[2])
    if got != expect:
        raise ConfigError(f"coupling counts {got} do not match params {expect}")
    slack = 1e-12
    if couplings.j_sys.size and np.max(np.abs(couplings.j_sys)) > params.j0 + slack:
        raise ConfigError("j_sys exceeds the |J| <= j0 bound")
    if couplings.j_env.size and np.max(np.abs(couplings.j_env)) > params.alpha * params.j0 + slack:
        raise ConfigError("j_env exceeds the |J| <= alpha*j0 bound")
    if couplings.g.size and np.max(np.abs(couplings.g)) > params.beta * params.j0 + slack:
        raise ConfigError("g exceeds the |g| <= beta*j0 bound")


def build_propagator(realization: HamiltonianRealization, dt: float) -> np.ndarray:
    """exp(-i H dt) for a realization, cached inside it for reuse."""
    return realization.propagator(dt)


def export_couplings(realization: HamiltonianRealization) -> dict:
    """JSON-ready document {params, j_sys, j_env, g} for provenance and replay."""
    p = realization.params
    c = realization.couplings
    return {
        "params": {
            "n_sys": p.n_sys,
            "n_env": p.n_env,
            "alpha": p.alpha,
            "beta": p.beta,
            "h_sys": p.h_sys,
            "h_env": p.h_env,
            "seed": p.seed,
            "j0": p.j0,
        },
        "j_sys": c.j_sys.tolist(),
        "j_env": c.j_env.tolist(),
        "g": c.g.reshape(p.n_sys, p.n_env).tolist() if p.n_env else [[] for _ in range(p.n_sys)],
    }


def import_couplings(doc: dict) -> HamiltonianRealization:
    """Rebuild a realization from an exported couplings document."""
    params = ReservoirParams(**doc["params"])
    g = np.asarray(doc["g"], dtype=float).reshape(params.n_sys, params.n_env if params.n_env else 0)
    couplings = CouplingSet(j_sys=np.asarray(doc["j_sys"]), j_env=np.asarray(doc["j_env"]), g=g)
    return build_hamiltonian(params, couplings)


def save_couplings(realization: HamiltonianRealization, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(export_couplings(realization), fh, indent=2)


def load_couplings(path) -> HamiltonianRealization:
    with open(path, encoding="utf-8") as fh:
        return import_couplings(json.load(fh))

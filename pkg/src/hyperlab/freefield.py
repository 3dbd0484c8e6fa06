"""Free massive scalar field on a truncated bosonic Fock space.

Modes sit on a cubic momentum lattice |k| <= K.  With per-mode weights
w_k = dk^3 / ((2 pi)^3 2 omega_k) the field reads

    phi(x) = sum_k sqrt(w_k) (a_k e^{-i k.x} + a_k^dag e^{i k.x})

so a test function chi gives creation coefficients (2 pi)^2 sqrt(w_k) chi_hat(k)
and annihilation coefficients (2 pi)^2 sqrt(w_k) chi_hat(-k).

Operators are stored as scipy sparse matrices; states are multisets of mode
indices with at most n_max particles.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from .minkowski import minkowski_dot

TWO_PI_SQ = (2 * np.pi) ** 2


class BasisOverflowError(RuntimeError):
    pass


class RankAmbiguityError(RuntimeError):
    pass


@dataclass(frozen=True)
class ModeGrid:
    mass: float = 1.0
    spacing: float = 0.25
    cutoff: float = 0.75

    def __post_init__(self):
        if self.mass <= 0 or self.spacing <= 0 or self.cutoff < 0:
            raise ValueError("mass and spacing must be positive, cutoff non-negative")
        nmax = int(math.floor(self.cutoff / self.spacing + 1e-9))
        rng = np.arange(-nmax, nmax + 1)
        n = np.array(list(itertools.product(rng, rng, rng)), dtype=int)
        keep = np.sum(n * n, axis=1) * self.spacing ** 2 <= self.cutoff ** 2 * (1 + 1e-12)
        n = n[keep]
        order = np.lexsort((n[:, 2], n[:, 1], n[:, 0], np.sum(n * n, axis=1)))
        n = n[order]
        k = n * self.spacing
        omega = np.sqrt(self.mass ** 2 + np.sum(k * k, axis=1))
        for name, val in (("lattice", n), ("momenta", k), ("energies", omega)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def size(self) -> int:
        return len(self.energies)

    @property
    def cell_volume(self) -> float:
        return self.spacing ** 3

    @property
    def weights(self) -> np.ndarray:
        return self.cell_volume / ((2 * np.pi) ** 3 * 2 * self.energies)

    @property
    def four_momenta(self) -> np.ndarray:
        return np.concatenate([self.energies[:, None], self.momenta], axis=1)

    @property
    def period(self) -> float:
        """Spatial period of every lattice plane wave."""
        return 2 * np.pi / self.spacing

    def convention(self) -> dict:
        return {"mass": self.mass, "spacing": self.spacing, "cutoff": self.cutoff, "modes": self.size,
                "creation_coefficient": "(2pi)^2 * sqrt(dk^3/((2pi)^3 2 omega_k)) * chi_hat(omega_k, k)"}


class FockBasis:
    """All multisets of modes of size <= n_max, ordered by particle number."""

    def __init__(self, grid: ModeGrid, n_max: int = 2, max_dim: int = 10000):
        dim = sum(math.comb(grid.size + n - 1, n) for n in range(n_max + 1))
        if dim > max_dim:
            raise BasisOverflowError(f"Fock dimension {dim} exceeds the guard {max_dim}")
        self.grid = grid
        self.n_max = n_max
        self.max_dim = max_dim
        states = [()]
        for n in range(1, n_max + 1):
            states.extend(itertools.combinations_with_replacement(range(grid.size), n))
        self.states = states
        self.index = {s: i for i, s in enumerate(states)}
        self.numbers = np.array([len(s) for s in states])
        kk = grid.four_momenta
        P = np.zeros((dim, 4))
        for i, s in enumerate(states):
            for j in s:
                P[i] += kk[j]
        self.momenta = P
        self._build_tables()

    @property
    def dim(self) -> int:
        return len(self.states)

    def _build_tables(self):
        M = self.grid.size
        low = np.nonzero(self.numbers < self.n_max)[0]
        target = -np.ones((self.dim, M), dtype=np.int64)
        amp = np.zeros((self.dim, M))
        for i in low:
            s = self.states[i]
            for j in range(M):
                t = tuple(sorted(s + (j,)))
                target[i, j] = self.index[t]
                amp[i, j] = math.sqrt(s.count(j) + 1)
        self.create_target = target
        self.create_amp = amp
        rows, modes, rest, ramp = [], [], [], []
        for i, s in enumerate(self.states):
            for j in sorted(set(s)):
                lst = list(s)
                lst.remove(j)
                rows.append(i)
                modes.append(j)
                rest.append(self.index[tuple(lst)])
                ramp.append(math.sqrt(s.count(j)))
        self.remove_state = np.array(rows, dtype=np.int64)
        self.remove_mode = np.array(modes, dtype=np.int64)
        self.remove_rest = np.array(rest, dtype=np.int64)
        self.remove_amp = np.array(ramp)

    @property
    def vacuum(self) -> np.ndarray:
        out = np.zeros(self.dim, dtype=complex)
        out[0] = 1.0
        return out

    def occupation(self, state_index: int, mode: int) -> int:
        return self.states[state_index].count(mode)

    def one_particle(self, mode: int) -> int:
        return self.index[(mode,)]

    def hash(self) -> str:
        payload = json.dumps({"grid": self.grid.convention(), "n_max": self.n_max}, sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


class OperatorMatrix:
    """Sparse matrix over a FockBasis with a provenance label."""

    def __init__(self, basis: FockBasis, mat, label: str = ""):
        mat = sparse.csr_matrix(mat, dtype=complex)
        if mat.shape != (basis.dim, basis.dim):
            raise ValueError("matrix shape does not match the basis")
        self.basis = basis
        self.mat = mat
        self.label = label

    def adjoint(self) -> OperatorMatrix:
        return OperatorMatrix(self.basis, self.mat.conj().T.tocsr(), f"({self.label})*")

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            return OperatorMatrix(self.basis, self.mat @ other.mat, f"{self.label} {other.label}")
        return self.mat @ np.asarray(other)

    def __add__(self, other):
        return OperatorMatrix(self.basis, self.mat + other.mat, f"{self.label} + {other.label}")

    def __sub__(self, other):
        return OperatorMatrix(self.basis, self.mat - other.mat, f"{self.label} - {other.label}")

    def __mul__(self, c):
        return OperatorMatrix(self.basis, self.mat * c, f"{c}*{self.label}")

    __rmul__ = __mul__

    def dense(self) -> np.ndarray:
        return self.mat.toarray()

    def max_entry(self) -> float:
        return float(np.max(np.abs(self.mat.data))) if self.mat.nnz else 0.0

    def norm(self) -> float:
        return operator_norm(self.mat)


def operator_norm(mat, dense_limit: int = 600) -> float:
    """Largest singular value (exact SVD for small matrices, ARPACK otherwise)."""
    if sparse.issparse(mat):
        mat = mat.tocsr()
        mat.eliminate_zeros()
        rows = np.unique(mat.nonzero()[0])
        cols = np.unique(mat.nonzero()[1])
        if len(rows) == 0:
            return 0.0
        mat = mat[rows][:, cols]
        if min(mat.shape) <= dense_limit:
            return float(np.linalg.norm(mat.toarray(), 2))
        v0 = np.ones(min(mat.shape)) / math.sqrt(min(mat.shape))
        return float(splinalg.svds(mat, k=1, v0=v0, tol=0, return_singular_vectors=False)[0])
    mat = np.asarray(mat)
    return float(np.linalg.norm(mat, 2)) if mat.size else 0.0


# -- coefficient-level operators --------------------------------------------

@dataclass(frozen=True)
class LinearField:
    """sum_k create_k a_k^dag + annihilate_k a_k on a ModeGrid."""

    grid: ModeGrid
    create: np.ndarray
    annihilate: np.ndarray
    label: str = "linear"

    def adjoint(self) -> LinearField:
        return LinearField(self.grid, np.conj(self.annihilate), np.conj(self.create), f"({self.label})*")

    def translated(self, a) -> LinearField:
        phase = np.exp(1j * minkowski_dot(self.grid.four_momenta, np.asarray(a, float)))
        return LinearField(self.grid, self.create * phase, self.annihilate * np.conj(phase), self.label)

    def commutator(self, other: LinearField) -> complex:
        """c-number [self, other]."""
        return complex(np.sum(self.annihilate * other.create) - np.sum(other.annihilate * self.create))

    def __add__(self, other):
        return LinearField(self.grid, self.create + other.create, self.annihilate + other.annihilate, self.label)

    def __sub__(self, other):
        return LinearField(self.grid, self.create - other.create, self.annihilate - other.annihilate, self.label)

    def scaled(self, c) -> LinearField:
        return LinearField(self.grid, c * self.create, c * self.annihilate, self.label)

    def matrix(self, basis: FockBasis) -> OperatorMatrix:
        return OperatorMatrix(basis, _linear_matrix(basis, self.create, self.annihilate), self.label)

    def one_particle_vector(self, basis: FockBasis) -> np.ndarray:
        """self applied to the vacuum."""
        out = np.zeros(basis.dim, dtype=complex)
        if basis.n_max >= 1:
            out[basis.create_target[0]] = self.create
        return out


def _creation_part(basis: FockBasis, coeffs):
    low = np.nonzero(basis.numbers < basis.n_max)[0]
    tgt = basis.create_target[low]
    amp = basis.create_amp[low] * coeffs[None, :]
    cols = np.repeat(low, basis.grid.size)
    keep = amp.reshape(-1) != 0
    return sparse.coo_matrix((amp.reshape(-1)[keep], (tgt.reshape(-1)[keep], cols[keep])),
                             shape=(basis.dim, basis.dim)).tocsr()


def _linear_matrix(basis, create, annihilate):
    create = np.asarray(create, dtype=complex)
    annihilate = np.asarray(annihilate, dtype=complex)
    return _creation_part(basis, create) + _creation_part(basis, np.conj(annihilate)).conj().T


def point_field(grid: ModeGrid) -> LinearField:
    """phi(0): coefficients sqrt(w_k) on both shells."""
    w = np.sqrt(grid.weights).astype(complex)
    return LinearField(grid, w, w.copy(), "phi(0)")


def smear_field(base: LinearField, chi_hat, label=None) -> LinearField:
    """Psi(chi) = int chi(x) Psi(x) dx for a base field Psi at the origin.

    ``chi_hat`` is any object with a ``hat(p)`` method.
    """
    k = base.grid.four_momenta
    create = TWO_PI_SQ * np.asarray(chi_hat.hat(k)) * base.create
    annihilate = TWO_PI_SQ * np.asarray(chi_hat.hat(-k)) * base.annihilate
    return LinearField(base.grid, create, annihilate, label or f"{base.label}(chi)")


def field_coefficients(grid: ModeGrid, chi) -> LinearField:
    return smear_field(point_field(grid), chi, "phi(chi)")


def build_field_operator(grid: ModeGrid, basis: FockBasis, chi) -> OperatorMatrix:
    """Matrix of phi(chi)."""
    if basis.grid is not grid and basis.grid != grid:
        raise ValueError("basis was built over a different grid")
    return field_coefficients(grid, chi).matrix(basis)


@dataclass(frozen=True)
class QuadraticField:
    """a^dag C a^dag + a^dag N a + a D a (+ const), C and D symmetric."""

    grid: ModeGrid
    C: np.ndarray
    N: np.ndarray
    D: np.ndarray
    const: complex = 0.0
    label: str = "quadratic"

    def adjoint(self) -> QuadraticField:
        return QuadraticField(self.grid, np.conj(self.D), self.N.conj().T, np.conj(self.C),
                              np.conj(self.const), f"({self.label})*")

    def translated(self, a) -> QuadraticField:
        ph = np.exp(1j * minkowski_dot(self.grid.four_momenta, np.asarray(a, float)))
        return QuadraticField(self.grid, self.C * np.outer(ph, ph), self.N * np.outer(ph, np.conj(ph)),
                              self.D * np.outer(np.conj(ph), np.conj(ph)), self.const, self.label)

    def commutator(self, other: QuadraticField) -> QuadraticField:
        """[self, other] in normal-ordered form (exact on the untruncated space)."""
        C1, N1, D1 = self.C, self.N, self.D
        C2, N2, D2 = other.C, other.N, other.D
        C = N1 @ C2 + C2 @ N1.T - (N2 @ C1 + C1 @ N2.T)
        N = N1 @ N2 - N2 @ N1 - 4 * C1 @ D2 + 4 * C2 @ D1
        D = -(N1.T @ D2 + D2 @ N1) + (N2.T @ D1 + D1 @ N2)
        const = -2 * np.trace(D2 @ C1) + 2 * np.trace(D1 @ C2)
        sym = lambda X: 0.5 * (X + X.T)
        return QuadraticField(self.grid, sym(C), N, sym(D), complex(const), f"[{self.label},{other.label}]")

    def two_particle_vector(self, basis: FockBasis) -> np.ndarray:
        """self applied to the vacuum (vacuum component = const)."""
        return self.matrix(basis) @ basis.vacuum

    def matrix(self, basis: FockBasis) -> OperatorMatrix:
        return OperatorMatrix(basis, _quadratic_matrix(basis, self.C, self.N, self.D, self.const), self.label)


def _pair_creation(basis, C):
    M = basis.grid.size
    low = np.nonzero(basis.numbers <= basis.n_max - 2)[0]
    if len(low) == 0:
        return sparse.csr_matrix((basis.dim, basis.dim), dtype=complex)
    t1 = basis.create_target[low]  # (S, M): apply a_l^dag
    a1 = basis.create_amp[low]
    t2 = basis.create_target[t1]  # (S, M_l, M_j)
    a2 = basis.create_amp[t1]
    vals = a1[:, :, None] * a2 * C.T[None, :, :]  # index [s, l, j] -> C[j, l]
    cols = np.broadcast_to(low[:, None, None], t2.shape)
    keep = vals.reshape(-1) != 0
    return sparse.coo_matrix((vals.reshape(-1)[keep], (t2.reshape(-1)[keep], cols.reshape(-1)[keep])),
                             shape=(basis.dim, basis.dim)).tocsr()


def _number_part(basis, N):
    src, rest = basis.remove_state, basis.remove_rest
    l, amp = basis.remove_mode, basis.remove_amp
    tgt = basis.create_target[rest]  # (E, M_j)
    a2 = basis.create_amp[rest]
    vals = amp[:, None] * a2 * N[:, l].T
    cols = np.broadcast_to(src[:, None], tgt.shape)
    keep = vals.reshape(-1) != 0
    return sparse.coo_matrix((vals.reshape(-1)[keep], (tgt.reshape(-1)[keep], cols.reshape(-1)[keep])),
                             shape=(basis.dim, basis.dim)).tocsr()


def _quadratic_matrix(basis, C, N, D, const=0.0):
    C = np.asarray(C, dtype=complex)
    N = np.asarray(N, dtype=complex)
    D = np.asarray(D, dtype=complex)
    out = _pair_creation(basis, C) + _number_part(basis, N) + _pair_creation(basis, np.conj(D)).conj().T
    if const:
        out = out + const * sparse.identity(basis.dim, dtype=complex, format="csr")
    return out


def wick_square_coefficients(grid: ModeGrid, g, amplitudes=None) -> QuadraticField:
    """:phi^2:(g) for a spacetime test function with ``hat(p)``.

    ``amplitudes`` optionally multiplies each mode (e.g. a smooth momentum taper).
    """
    kk = grid.four_momenta
    sw = np.sqrt(grid.weights)
    if amplitudes is not None:
        sw = sw * np.asarray(amplitudes)
    W = np.outer(sw, sw)
    plus = kk[:, None, :] + kk[None, :, :]
    minus = kk[:, None, :] - kk[None, :, :]
    C = TWO_PI_SQ * W * g.hat(plus)
    N = 2 * TWO_PI_SQ * W * g.hat(minus)
    D = TWO_PI_SQ * W * g.hat(-plus)
    return QuadraticField(grid, C, N, D, 0.0, ":phi^2:(g)")


def build_wick_square(grid: ModeGrid, basis: FockBasis, g, amplitudes=None) -> OperatorMatrix:
    return wick_square_coefficients(grid, g, amplitudes).matrix(basis)


def two_particle_inner(C1, C2) -> complex:
    """<a^dag C1 a^dag Omega, a^dag C2 a^dag Omega> for symmetric C's."""
    return complex(2 * np.sum(np.conj(C1) * C2))


# -- projectors and translations --------------------------------------------

def spectral_projector(basis: FockBasis, region) -> OperatorMatrix:
    """Diagonal 0/1 projector onto states whose total momentum lies in ``region``.

    ``region`` maps an (n, 4) array of momenta to booleans.
    """
    mask = np.asarray(region(basis.momenta), dtype=bool)
    return OperatorMatrix(basis, sparse.diags(mask.astype(complex), format="csr"), "E")


def projector_mask(basis: FockBasis, region) -> np.ndarray:
    return np.asarray(region(basis.momenta), dtype=bool)


def region_whole(P):
    return np.ones(len(P), dtype=bool)


def region_origin(P, tol=1e-12):
    return np.all(np.abs(P) <= tol, axis=1)


def region_energy_below(bound):
    return lambda P: P[:, 0] <= bound + 1e-12


def region_shell(mass, mu=0.0, tol=1e-9):
    """{p : |sqrt(p^2) - m| <= mu, p0 > 0}."""

    def region(P):
        p2 = minkowski_dot(P, P)
        root = np.sqrt(np.maximum(p2, 0.0))
        return (P[:, 0] > 0) & (p2 > 0) & (np.abs(root - mass) <= mu + tol)

    return region


def region_box(lo, hi):
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    return lambda P: np.all((P >= lo) & (P <= hi), axis=1)


def vacuum_complement(basis: FockBasis) -> OperatorMatrix:
    mask = np.ones(basis.dim)
    mask[0] = 0.0
    return OperatorMatrix(basis, sparse.diags(mask.astype(complex), format="csr"), "E_Omega_perp")


def translation_phases(basis: FockBasis, a) -> np.ndarray:
    return np.exp(1j * minkowski_dot(basis.momenta, np.asarray(a, float)))


def translation(basis: FockBasis, a) -> OperatorMatrix:
    """U(a), diagonal with phases exp(i P.a)."""
    return OperatorMatrix(basis, sparse.diags(translation_phases(basis, a), format="csr"), "U")


def translate_operator(basis: FockBasis, A: OperatorMatrix, a) -> OperatorMatrix:
    """U(a) A U(-a)."""
    ph = translation_phases(basis, a)
    mat = sparse.diags(ph) @ A.mat @ sparse.diags(np.conj(ph))
    return OperatorMatrix(basis, mat, f"{A.label}(a)")


def graded_commutator(A, B, sign: int = -1):
    """AB + sign*BA: sign=-1 commutator, +1 anticommutator (works for arrays and OperatorMatrix)."""
    if isinstance(A, OperatorMatrix):
        return OperatorMatrix(A.basis, A.mat @ B.mat + sign * (B.mat @ A.mat), "[A,B]")
    return A @ B + sign * (B @ A)


def ladder_matrices(basis: FockBasis, mode: int):
    """(a_mode, a_mode^dag) as sparse matrices."""
    e = np.zeros(basis.grid.size, dtype=complex)
    e[mode] = 1.0
    ad = _creation_part(basis, e)
    return ad.conj().T.tocsr(), ad


# -- kernel projector lemma -----------------------------------------------

@dataclass(frozen=True)
class LemmaReport:
    lhs1: float
    rhs1: float
    lhs2: float
    rhs2: float
    kernel_dim: int
    satisfied: bool


def kernel_projector(A, n: int, rank_tol: float | None = None, window: float = 1e3) -> np.ndarray:
    """Orthogonal projector onto ker A^n via SVD.

    Singular values within a factor ``window`` of the threshold make the rank
    decision ambiguous and raise unless ``rank_tol`` is given explicitly.
    """
    A = np.asarray(A, dtype=complex)
    An = np.linalg.matrix_power(A, n)
    _, sv, vh = np.linalg.svd(An)
    scale = max(1.0, float(np.linalg.norm(A, 2))) ** n
    explicit = rank_tol is not None
    tol = rank_tol if explicit else 1e-9 * scale
    if not explicit and np.any((sv > tol / window) & (sv < tol * window)):
        raise RankAmbiguityError("singular values of A^n near the rank threshold; pass rank_tol")
    null = vh[sv <= tol].conj().T
    if len(sv) < A.shape[0]:
        null = np.concatenate([null, vh[len(sv):].conj().T], axis=1)
    return null @ null.conj().T


def kernel_projector_lemma_check(A, n: int, rank_tol: float | None = None, slack: float = 1e-12) -> LemmaReport:
    if isinstance(A, OperatorMatrix):
        A = A.dense()
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("square matrix required")
    P = kernel_projector(A, n, rank_tol)
    comm = float(np.linalg.norm(A @ A.conj().T - A.conj().T @ A, 2))
    lhs1 = float(np.linalg.norm(A @ P, 2)) ** 2
    lhs2 = float(np.linalg.norm(A.conj().T @ P, 2)) ** 2
    rhs1, rhs2 = (n - 1) * comm, n * comm
    tol = slack * max(1.0, float(np.linalg.norm(A, 2))) ** 2
    ok = lhs1 <= rhs1 + tol and lhs2 <= rhs2 + tol
    return LemmaReport(lhs1, rhs1, lhs2, rhs2, int(round(np.real(np.trace(P)))), ok)


def random_lemma_matrix(rng: np.random.Generator, dim: int, nilpotent_dim: int) -> np.ndarray:
    """Random matrix whose A^n has a kernel: a strictly upper triangular block
    coupled to an invertible block, in a random unitary frame."""
    k = nilpotent_dim
    A = np.zeros((dim, dim), dtype=complex)
    A[:k, :k] = np.triu(rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k)), 1)
    A[:k, k:] = rng.normal(size=(k, dim - k)) + 1j * rng.normal(size=(k, dim - k))
    B = rng.normal(size=(dim - k, dim - k)) + 1j * rng.normal(size=(dim - k, dim - k))
    A[k:, k:] = B + 2 * np.sqrt(dim) * np.eye(dim - k)
    Q, _ = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    return Q @ A @ Q.conj().T


# -- binary dumps ------------------------------------------------------------

DUMP_VERSION = 1


def dump_operator(path, A: OperatorMatrix):
    header = {"version": DUMP_VERSION, "label": A.label, "basis": A.basis.hash(),
              "grid": A.basis.grid.convention(), "n_max": A.basis.n_max}
    coo = A.mat.tocoo()
    np.savez(path, header=np.frombuffer(json.dumps(header, sort_keys=True).encode(), dtype=np.uint8),
             row=coo.row, col=coo.col, data=coo.data)


def load_operator(path, basis: FockBasis) -> OperatorMatrix:
    with np.load(path) as z:
        header = json.loads(bytes(z["header"]).decode())
        if header["version"] != DUMP_VERSION or header["basis"] != basis.hash():
            raise ValueError("dump does not match this basis or format version")
        mat = sparse.coo_matrix((z["data"], (z["row"], z["col"])), shape=(basis.dim, basis.dim))
    return OperatorMatrix(basis, mat, header["label"])

"""Sparse truncated Fock-space algebra over polarization-resolved spatial modes.

Basis kets are canonical tuples of ``(ModeLabel, n)`` pairs with zero
occupations dropped. Pure states are sparse ket -> amplitude maps; density
operators are stored densely on their (small) support so that traces,
Hermiticity and positivity checks stay cheap.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

PRUNE_EPS = 1e-15

SPATIAL_MODES = ("0", "0'", "1", "2", "1'", "2'", "1''", "2''")
POLARIZATIONS = ("H", "V")


class TruncationOverflowError(ValueError):
    """An operation produced an occupation beyond the configured caps."""


class NonUnitaryTransformError(ValueError):
    pass


class ModeLabel(NamedTuple):
    spatial: str
    pol: str

    def __repr__(self) -> str:
        return f"{self.spatial}{self.pol}"


def mode(spatial: str, pol: str) -> ModeLabel:
    if spatial not in SPATIAL_MODES:
        raise ValueError(f"unknown spatial mode {spatial!r}")
    if pol not in POLARIZATIONS:
        raise ValueError(f"unknown polarization {pol!r}")
    return ModeLabel(spatial, pol)


@dataclass(frozen=True)
class Truncation:
    per_mode: int = 2
    total: int = 6

    def check(self, ket: "FockBasisState") -> None:
        for m, n in ket:
            if n > self.per_mode:
                raise TruncationOverflowError(
                    f"occupation {n} of mode {m!r} exceeds per-mode cap {self.per_mode}"
                )
        if ket.total() > self.total:
            raise TruncationOverflowError(
                f"{ket.total()} photons exceed total cap {self.total}"
            )


DEFAULT_TRUNCATION = Truncation()


class FockBasisState(tuple):
    """Occupation-number ket, stored as sorted ``((mode, n), ...)`` with n > 0."""

    __slots__ = ()

    def __new__(cls, occupations: Mapping[ModeLabel, int] | Iterable = ()):
        items = occupations.items() if isinstance(occupations, Mapping) else occupations
        merged: dict[ModeLabel, int] = {}
        for m, n in items:
            if n < 0:
                raise ValueError("occupation numbers must be non-negative")
            m = ModeLabel(*m)
            merged[m] = merged.get(m, 0) + int(n)
        return tuple.__new__(cls, tuple(sorted((m, n) for m, n in merged.items() if n)))

    @classmethod
    def _from_sorted(cls, pairs: tuple) -> "FockBasisState":
        return tuple.__new__(cls, pairs)

    def occupation(self, m: ModeLabel) -> int:
        for k, n in self:
            if k == m:
                return n
        return 0

    def total(self) -> int:
        return sum(n for _, n in self)

    def spatial_total(self, spatial: str) -> int:
        return sum(n for m, n in self if m.spatial == spatial)

    def as_dict(self) -> dict[ModeLabel, int]:
        return dict(self)

    def with_occupation(self, m: ModeLabel, n: int) -> "FockBasisState":
        d = dict(self)
        d[m] = n
        return FockBasisState(d)

    def split(self, keep: Callable[[ModeLabel], bool]) -> tuple["FockBasisState", "FockBasisState"]:
        """Return (kept part, discarded part)."""
        a = tuple(p for p in self if keep(p[0]))
        b = tuple(p for p in self if not keep(p[0]))
        return FockBasisState._from_sorted(a), FockBasisState._from_sorted(b)

    def relabel(self, mapping: Mapping[str, str]) -> "FockBasisState":
        return FockBasisState(
            (ModeLabel(mapping.get(m.spatial, m.spatial), m.pol), n) for m, n in self
        )

    def __repr__(self) -> str:
        if not self:
            return "|vac>"
        return "|" + " ".join(f"{n}_{m.pol}[{m.spatial}]" for m, n in self) + ">"


VACUUM = FockBasisState()


def ket(*terms: tuple[str, str, int]) -> FockBasisState:
    """``ket(("2", "H", 1), ("0'", "H", 1))`` -> |1_H>_2 |1_H>_0'."""
    return FockBasisState((mode(s, p), n) for s, p, n in terms)


class PureState:
    """Sparse superposition of Fock kets. Treated as immutable."""

    __slots__ = ("amplitudes", "truncation")

    def __init__(
        self,
        amplitudes: Mapping[FockBasisState, complex] | None = None,
        truncation: Truncation = DEFAULT_TRUNCATION,
    ):
        amps: dict[FockBasisState, complex] = {}
        for k, a in (amplitudes or {}).items():
            if abs(a) >= PRUNE_EPS:
                amps[k] = complex(a)
        for k in amps:
            truncation.check(k)
        self.amplitudes = amps
        self.truncation = truncation

    @classmethod
    def vacuum(cls, truncation: Truncation = DEFAULT_TRUNCATION) -> "PureState":
        return cls({VACUUM: 1.0}, truncation)

    @classmethod
    def basis(cls, k: FockBasisState, truncation: Truncation = DEFAULT_TRUNCATION) -> "PureState":
        return cls({k: 1.0}, truncation)

    def __getitem__(self, k: FockBasisState) -> complex:
        return self.amplitudes.get(k, 0j)

    def __iter__(self):
        return iter(self.amplitudes.items())

    def __len__(self) -> int:
        return len(self.amplitudes)

    def kets(self) -> list[FockBasisState]:
        return sorted(self.amplitudes)

    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    def normalize(self) -> "PureState":
        nrm = self.norm()
        if nrm == 0:
            raise ZeroDivisionError("cannot normalize the zero vector")
        return self * (1.0 / nrm)

    def with_truncation(self, truncation: Truncation) -> "PureState":
        return PureState(self.amplitudes, truncation)

    def __mul__(self, c: complex) -> "PureState":
        return PureState({k: c * a for k, a in self.amplitudes.items()}, self.truncation)

    __rmul__ = __mul__

    def __add__(self, other: "PureState") -> "PureState":
        out = dict(self.amplitudes)
        for k, a in other.amplitudes.items():
            out[k] = out.get(k, 0j) + a
        return PureState(out, self.truncation)

    def __sub__(self, other: "PureState") -> "PureState":
        return self + other * -1.0

    def relabel(self, mapping: Mapping[str, str]) -> "PureState":
        return PureState({k.relabel(mapping): a for k, a in self.amplitudes.items()}, self.truncation)

    def to_vector(self, basis: Sequence[FockBasisState]) -> np.ndarray:
        return np.array([self[k] for k in basis], dtype=complex)

    def __repr__(self) -> str:
        terms = [f"({a:.6g}){k!r}" for k, a in sorted(self.amplitudes.items())]
        return " + ".join(terms) if terms else "0"


def inner_product(a: PureState, b: PureState) -> complex:
    """<a|b>, antilinear in ``a``."""
    if len(a) > len(b):
        return complex(sum(a[k].conjugate() * v for k, v in b.amplitudes.items()))
    return complex(sum(v.conjugate() * b[k] for k, v in a.amplitudes.items()))


def tensor(a: PureState, b: PureState) -> PureState:
    """Product of states living on disjoint modes."""
    out: dict[FockBasisState, complex] = {}
    for ka, va in a:
        modes_a = {m for m, _ in ka}
        for kb, vb in b:
            if any(m in modes_a for m, _ in kb):
                raise ValueError("tensor factors must act on disjoint modes")
            out[FockBasisState(ka + kb)] = va * vb
    return PureState(out, a.truncation)


def create(state: PureState, m: ModeLabel) -> PureState:
    """Apply the creation operator of mode ``m``."""
    out: dict[FockBasisState, complex] = {}
    for k, a in state:
        n = k.occupation(m)
        k2 = k.with_occupation(m, n + 1)
        out[k2] = out.get(k2, 0j) + math.sqrt(n + 1) * a
    return PureState(out, state.truncation)


def annihilate(state: PureState, m: ModeLabel) -> PureState:
    out: dict[FockBasisState, complex] = {}
    for k, a in state:
        n = k.occupation(m)
        if n == 0:
            continue
        k2 = k.with_occupation(m, n - 1)
        out[k2] = out.get(k2, 0j) + math.sqrt(n) * a
    return PureState(out, state.truncation)


# ---------------------------------------------------------------------------
# linear mode transforms


class ModeTransform:
    """Linear map of creation operators: a_in[j]^dag -> sum_i matrix[i, j] a_out[i]^dag.

    For single-photon amplitude vectors this is just ``matrix @ v``.
    """

    def __init__(
        self,
        matrix,
        input_modes: Sequence[ModeLabel],
        output_modes: Sequence[ModeLabel] | None = None,
        atol: float = 1e-12,
    ):
        self.matrix = np.asarray(matrix, dtype=complex)
        self.input_modes = tuple(ModeLabel(*m) for m in input_modes)
        self.output_modes = tuple(
            ModeLabel(*m) for m in (input_modes if output_modes is None else output_modes)
        )
        n = len(self.input_modes)
        if self.matrix.shape != (n, n) or len(self.output_modes) != n:
            raise ValueError("matrix shape does not match the mode lists")
        if not self.is_unitary(atol):
            raise NonUnitaryTransformError("mode transform is not unitary")
        self._index = {m: j for j, m in enumerate(self.input_modes)}

    def is_unitary(self, atol: float = 1e-12) -> bool:
        n = self.matrix.shape[0]
        return bool(np.allclose(self.matrix.conj().T @ self.matrix, np.eye(n), rtol=0, atol=atol))

    @classmethod
    def identity(cls, modes: Sequence[ModeLabel]) -> "ModeTransform":
        return cls(np.eye(len(modes)), modes)

    def then(self, other: "ModeTransform") -> "ModeTransform":
        """Apply ``self`` first and ``other`` second."""
        if set(other.input_modes) != set(self.output_modes):
            raise ValueError("output modes of the first transform must feed the second")
        perm = [other.input_modes.index(m) for m in self.output_modes]
        return ModeTransform(
            other.matrix[:, perm] @ self.matrix, self.input_modes, other.output_modes
        )

    def image(self, m: ModeLabel) -> list[tuple[ModeLabel, complex]]:
        j = self._index[m]
        col = self.matrix[:, j]
        return [(self.output_modes[i], col[i]) for i in range(len(col)) if abs(col[i]) > 0]


def _expand_photons(photons: Sequence[ModeLabel], t: ModeTransform) -> dict[tuple, complex]:
    """Expand prod_k (T a_k^dag) as a polynomial in output creation operators.

    Returns a map from sorted output-mode multisets to coefficients.
    """
    poly: dict[tuple, complex] = {(): 1.0 + 0j}
    for m in photons:
        img = t.image(m)
        nxt: dict[tuple, complex] = {}
        for mono, c in poly.items():
            for om, u in img:
                key = tuple(sorted(mono + (om,)))
                nxt[key] = nxt.get(key, 0j) + c * u
        poly = nxt
    return poly


def apply_mode_transform(state: PureState, t: ModeTransform, atol: float = 1e-12) -> PureState:
    """Rewrite every ket as creation operators on vacuum and substitute ``t``.

    Modes outside ``t.input_modes`` are bystanders and pass through untouched.
    """
    if not t.is_unitary(atol):
        raise NonUnitaryTransformError("mode transform is not unitary")
    inputs = set(t.input_modes)
    cache: dict[FockBasisState, list[tuple[FockBasisState, complex]]] = {}
    out: dict[FockBasisState, complex] = {}
    for k, a in state:
        active, rest = k.split(lambda m: m in inputs)
        if active not in cache:
            photons: list[ModeLabel] = []
            norm = 1.0
            for m, n in active:
                photons.extend([m] * n)
                norm *= math.factorial(n)
            terms = []
            for mono, c in _expand_photons(photons, t).items():
                occ: dict[ModeLabel, int] = {}
                for om in mono:
                    occ[om] = occ.get(om, 0) + 1
                w = math.prod(math.factorial(n) for n in occ.values())
                terms.append((FockBasisState(occ), c * math.sqrt(w / norm)))
            cache[active] = terms
        rest_modes = {m for m, _ in rest}
        for k_out, c in cache[active]:
            if any(m in rest_modes for m, _ in k_out):
                raise ValueError("transform outputs collide with bystander modes")
            key = FockBasisState(k_out + rest)
            out[key] = out.get(key, 0j) + a * c
    return PureState(out, state.truncation)


# ---------------------------------------------------------------------------
# operators and density operators


class Operator:
    """Sparse linear operator given by its action on basis kets.

    ``action(ket)`` returns an iterable of ``(ket', coefficient)`` pairs.
    """

    def __init__(self, action: Callable[[FockBasisState], Iterable[tuple[FockBasisState, complex]]]):
        self.action = action

    @classmethod
    def identity(cls) -> "Operator":
        return cls(lambda k: ((k, 1.0),))

    @classmethod
    def diagonal(cls, weight: Callable[[FockBasisState], complex]) -> "Operator":
        def act(k):
            w = weight(k)
            return ((k, w),) if w != 0 else ()

        return cls(act)

    @classmethod
    def projector(cls, x: PureState) -> "Operator":
        """|x><x|."""
        return cls(lambda k: [(kx, ax * x[k].conjugate()) for kx, ax in x] if x[k] != 0 else ())

    @classmethod
    def from_entries(cls, entries: Mapping[tuple[FockBasisState, FockBasisState], complex]) -> "Operator":
        """``entries[(out, in)]`` is the matrix element <out|op|in>."""
        cols: dict[FockBasisState, list] = {}
        for (ko, ki), v in entries.items():
            cols.setdefault(ki, []).append((ko, v))
        return cls(lambda k: cols.get(k, ()))

    def __matmul__(self, other: "Operator") -> "Operator":
        def act(k):
            out: dict[FockBasisState, complex] = {}
            for k1, c1 in other.action(k):
                for k2, c2 in self.action(k1):
                    out[k2] = out.get(k2, 0j) + c1 * c2
            return out.items()

        return Operator(act)

    def apply(self, state: PureState) -> PureState:
        out: dict[FockBasisState, complex] = {}
        for k, a in state:
            for k2, c in self.action(k):
                out[k2] = out.get(k2, 0j) + a * c
        return PureState(out, state.truncation)

    def matrix(self, basis_in: Sequence[FockBasisState]) -> tuple[list[FockBasisState], np.ndarray]:
        """Return (output basis, matrix) restricted to ``basis_in``."""
        cols = [list(self.action(k)) for k in basis_in]
        out_basis = sorted({k2 for col in cols for k2, _ in col})
        idx = {k: i for i, k in enumerate(out_basis)}
        mat = np.zeros((len(out_basis), len(basis_in)), dtype=complex)
        for j, col in enumerate(cols):
            for k2, c in col:
                mat[idx[k2], j] += c
        return out_basis, mat


class DensityOperator:
    """Hermitian operator stored as a dense matrix over its sorted support basis.

    ``entry(a, b)`` is zero for kets outside the support, so this behaves as
    a sparse map over pairs of basis kets.
    """

    __slots__ = ("basis", "matrix", "_index")

    def __init__(self, basis: Sequence[FockBasisState], matrix):
        basis = list(basis)
        mat = np.asarray(matrix, dtype=complex)
        if mat.shape != (len(basis), len(basis)):
            raise ValueError("matrix shape does not match the basis")
        order = sorted(range(len(basis)), key=lambda i: basis[i])
        if order != list(range(len(basis))):
            basis = [basis[i] for i in order]
            mat = mat[np.ix_(order, order)]
        self.basis = tuple(basis)
        self.matrix = mat
        self._index = {k: i for i, k in enumerate(self.basis)}

    @classmethod
    def from_pure(cls, psi: PureState) -> "DensityOperator":
        basis = psi.kets()
        v = psi.to_vector(basis)
        return cls(basis, np.outer(v, v.conj()))

    @classmethod
    def from_entries(cls, entries: Mapping[tuple[FockBasisState, FockBasisState], complex]) -> "DensityOperator":
        basis = sorted({k for pair in entries for k in pair})
        idx = {k: i for i, k in enumerate(basis)}
        mat = np.zeros((len(basis), len(basis)), dtype=complex)
        for (a, b), v in entries.items():
            mat[idx[a], idx[b]] = v
        return cls(basis, mat)

    @classmethod
    def zero(cls) -> "DensityOperator":
        return cls([], np.zeros((0, 0)))

    def entry(self, a: FockBasisState, b: FockBasisState) -> complex:
        i, j = self._index.get(a), self._index.get(b)
        if i is None or j is None:
            return 0j
        return complex(self.matrix[i, j])

    def entries(self) -> dict[tuple[FockBasisState, FockBasisState], complex]:
        nz = np.argwhere(np.abs(self.matrix) >= PRUNE_EPS)
        return {(self.basis[i], self.basis[j]): complex(self.matrix[i, j]) for i, j in nz}

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.matrix, self.matrix.conj().T, rtol=0, atol=atol))

    def min_eigenvalue(self) -> float:
        if not self.basis:
            return 0.0
        h = (self.matrix + self.matrix.conj().T) / 2
        return float(np.linalg.eigvalsh(h)[0])

    def is_psd(self, atol: float = 1e-10) -> bool:
        return self.min_eigenvalue() >= -atol

    def expectation(self, op: Operator) -> complex:
        """Tr(op rho)."""
        out_basis, mat = op.matrix(self.basis)
        idx = [self._index.get(k) for k in out_basis]
        total = 0j
        for r, i in enumerate(idx):
            if i is not None:
                total += mat[r] @ self.matrix[:, i]
        return total

    def expectation_diagonal(self, weight: Callable[[FockBasisState], float]) -> float:
        """Tr(W rho) for an operator diagonal in the Fock basis."""
        w = np.array([weight(k) for k in self.basis], dtype=float)
        return float(w @ np.diag(self.matrix).real)

    def __add__(self, other: "DensityOperator") -> "DensityOperator":
        basis = sorted(set(self.basis) | set(other.basis))
        idx = {k: i for i, k in enumerate(basis)}
        mat = np.zeros((len(basis), len(basis)), dtype=complex)
        for rho in (self, other):
            p = [idx[k] for k in rho.basis]
            mat[np.ix_(p, p)] += rho.matrix
        return DensityOperator(basis, mat)

    def __mul__(self, c: float) -> "DensityOperator":
        return DensityOperator(self.basis, self.matrix * c)

    __rmul__ = __mul__

    def normalized(self) -> "DensityOperator":
        return self * (1.0 / self.trace())

    def relabel(self, mapping: Mapping[str, str]) -> "DensityOperator":
        return DensityOperator([k.relabel(mapping) for k in self.basis], self.matrix)

    def pruned(self) -> "DensityOperator":
        keep = [i for i in range(len(self.basis)) if np.any(np.abs(self.matrix[i]) >= PRUNE_EPS)]
        return DensityOperator([self.basis[i] for i in keep], self.matrix[np.ix_(keep, keep)])


def apply_operator_sandwich(rho: DensityOperator, op: Operator) -> DensityOperator:
    """Return op . rho . op^dagger."""
    out_basis, a = op.matrix(rho.basis)
    return DensityOperator(out_basis, a @ rho.matrix @ a.conj().T).pruned()


def partial_trace(rho: DensityOperator, keep: Iterable[str]) -> DensityOperator:
    """Trace out every spatial mode not listed in ``keep``."""
    keep = set(keep)
    kept, traced = zip(*(k.split(lambda m: m.spatial in keep) for k in rho.basis)) if rho.basis else ((), ())
    out_basis = sorted(set(kept))
    idx = {k: i for i, k in enumerate(out_basis)}
    groups: dict[FockBasisState, list[int]] = {}
    for i, t in enumerate(traced):
        groups.setdefault(t, []).append(i)
    mat = np.zeros((len(out_basis), len(out_basis)), dtype=complex)
    for rows in groups.values():
        p = [idx[kept[i]] for i in rows]
        mat[np.ix_(p, p)] += rho.matrix[np.ix_(rows, rows)]
    return DensityOperator(out_basis, mat)


def project_outcome(rho: DensityOperator, weight: Callable[[FockBasisState], float]) -> DensityOperator:
    """Multiply ``rho`` by a diagonal effect from the left: the argument of a
    subsequent partial trace, Tr_traced[W rho]. ``weight`` must depend only on
    the modes that are traced out afterwards."""
    w = np.array([weight(k) for k in rho.basis], dtype=float)
    return DensityOperator(rho.basis, w[:, None] * rho.matrix)


def all_kets(modes: Sequence[ModeLabel], truncation: Truncation) -> list[FockBasisState]:
    """Every ket on ``modes`` allowed by ``truncation`` (used by dense oracles)."""
    out = []
    for occ in itertools.product(range(truncation.per_mode + 1), repeat=len(modes)):
        if sum(occ) <= truncation.total:
            out.append(FockBasisState(zip(modes, occ)))
    return sorted(out)


def mode_transform_operator(t: ModeTransform) -> Operator:
    """The Fock-space unitary induced by ``t``, as a sparse Operator."""
    cache: dict[FockBasisState, list] = {}

    def act(k):
        if k not in cache:
            cache[k] = list(apply_mode_transform(PureState({k: 1.0}, Truncation(k.total(), k.total())), t))
        return cache[k]

    return Operator(act)


def transform_density(rho: DensityOperator, t: ModeTransform) -> DensityOperator:
    """U rho U^dagger for the Fock-space unitary induced by ``t``."""
    return apply_operator_sandwich(rho, mode_transform_operator(t))

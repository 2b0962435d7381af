"""Quantum states and measurements: validated containers, constructors, JSON.

``DensityMatrix`` and ``Povm`` validate themselves on construction and are
immutable afterwards (their arrays are flagged read-only). Random ensembles
draw from a ``numpy.random.Generator``; any integer seed is accepted in its
place and turned into a PCG64 stream.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg
from .config import DEFAULT_TOL, Tolerances


class ValidationError(ValueError):
    """A state or measurement fails one of its defining constraints."""


def make_rng(seed=None) -> np.random.Generator:
    """Seeded PCG64 generator; an existing Generator is passed through."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def derived_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for sub-task ``index`` of a run seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, index])))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def fingerprint(*arrays: np.ndarray) -> str:
    h = hashlib.sha1()
    for a in arrays:
        h.update(np.ascontiguousarray(a).tobytes())
    return h.hexdigest()[:12]


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    mat: np.ndarray
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False)
    purity: float = field(init=False)

    def __post_init__(self):
        m = linalg.as_matrix(self.mat, "density matrix")
        defect = linalg.hermiticity_defect(m)
        if defect > self.tol.hermitian:
            raise ValidationError(f"density matrix not Hermitian (defect {defect:.3e})")
        tr = linalg.trace(m)
        if abs(tr - 1.0) >= self.tol.trace:
            raise ValidationError(f"density matrix trace {tr} differs from 1")
        w = linalg.eigvalsh(m, self.tol)
        if w[0] < -self.tol.psd:
            raise ValidationError(f"density matrix not PSD (min eigenvalue {w[0]:.3e})")
        purity = float(np.sum(np.abs(m) ** 2))  # tr(rho^2) for Hermitian rho
        d = m.shape[0]
        if not (1.0 / d - self.tol.psd <= purity <= 1.0 + self.tol.psd):
            raise ValidationError(f"purity {purity} outside [1/d, 1]")
        object.__setattr__(self, "mat", _frozen(m))
        object.__setattr__(self, "purity", purity)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def ref(self) -> str:
        return "rho:" + fingerprint(self.mat)

    def to_json(self) -> dict:
        return matrix_to_json(self.mat)

    @classmethod
    def from_json(cls, obj: dict, tol: Tolerances = DEFAULT_TOL) -> "DensityMatrix":
        return cls(matrix_from_json(obj), tol)


@dataclass(frozen=True, eq=False)
class Povm:
    """A measurement ``{E_i}``: PSD elements summing to the identity.

    ``projective`` is derived from the elements (``E_i E_j = delta_ij E_i``)
    and never taken from the caller.
    """

    elements: np.ndarray
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False)
    projective: bool = field(init=False)

    def __post_init__(self):
        els = np.array(self.elements, dtype=np.complex128)
        if els.ndim != 3 or els.shape[1] != els.shape[2] or els.shape[0] < 1 or els.shape[1] < 1:
            raise ValidationError(f"POVM must be a nonempty stack of square matrices, got shape {els.shape}")
        if not np.all(np.isfinite(els)):
            raise ValidationError("POVM contains NaN or Inf entries")
        tol = self.tol
        d = els.shape[1]
        for i, e in enumerate(els):
            defect = linalg.hermiticity_defect(e)
            if defect > tol.hermitian:
                raise ValidationError(f"POVM element {i} not Hermitian (defect {defect:.3e})")
        gap = float(np.max(np.abs(els.sum(axis=0) - np.eye(d))))
        if gap > tol.completeness:
            raise ValidationError(f"POVM elements do not sum to identity (max deviation {gap:.3e})")
        products = np.einsum("iab,jbc->ijac", els, els)
        target = np.einsum("ij,iab->ijab", np.eye(len(els)), els)
        projective = bool(np.max(np.abs(products - target)) <= tol.projective)
        # Hermitian idempotents are PSD, so only general elements need the spectrum
        if not projective:
            for i, e in enumerate(els):
                w = linalg.eigvalsh(e, tol)
                if w[0] < -tol.psd:
                    raise ValidationError(f"POVM element {i} not PSD (min eigenvalue {w[0]:.3e})")
        object.__setattr__(self, "elements", _frozen(els))
        object.__setattr__(self, "projective", projective)

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    def __len__(self) -> int:
        return self.elements.shape[0]

    def __getitem__(self, i) -> np.ndarray:
        return self.elements[i]

    def __iter__(self):
        return iter(self.elements)

    @property
    def ref(self) -> str:
        return "povm:" + fingerprint(self.elements)

    def probabilities(self, rho: DensityMatrix) -> np.ndarray:
        """Born-rule outcome probabilities ``tr(rho E_i)``."""
        return np.einsum("ab,iba->i", rho.mat, self.elements).real

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "elements": [matrix_to_json(e) for e in self.elements],
            "projective": self.projective,
        }

    @classmethod
    def from_json(cls, obj: dict, tol: Tolerances = DEFAULT_TOL) -> "Povm":
        povm = cls(np.array([matrix_from_json(e) for e in obj["elements"]]), tol)
        if "projective" in obj and bool(obj["projective"]) != povm.projective:
            raise ValidationError("serialized projective flag disagrees with the elements")
        return povm


def matrix_to_json(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=np.complex128)
    return {
        "dim": int(m.shape[0]),
        "entries": [[float(z.real), float(z.imag)] for z in m.ravel()],
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    d = int(obj["dim"])
    entries = obj["entries"]
    if len(entries) != d * d:
        raise ValidationError(f"expected {d * d} entries for dim {d}, got {len(entries)}")
    flat = np.array([complex(re, im) for re, im in entries], dtype=np.complex128)
    return flat.reshape(d, d)


# -- constructors -----------------------------------------------------------


def pure_state(amplitudes: Sequence[complex]) -> DensityMatrix:
    psi = np.asarray(amplitudes, dtype=np.complex128).ravel()
    norm = np.linalg.norm(psi)
    if psi.size == 0 or norm == 0:
        raise ValueError("pure_state needs a nonzero amplitude vector")
    psi = psi / norm
    return DensityMatrix(np.outer(psi, psi.conj()))


def maximally_mixed(d: int) -> DensityMatrix:
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    return DensityMatrix(np.eye(d, dtype=np.complex128) / d)


def _ginibre(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def random_pure(d: int, rng) -> DensityMatrix:
    """Haar-random pure state from a normalized complex Gaussian vector."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    return pure_state(_ginibre(make_rng(rng), d, 1)[:, 0])


def random_density(d: int, rank: int, rng) -> DensityMatrix:
    """``G G^dagger / tr(G G^dagger)`` for a ``d x rank`` complex Gaussian ``G``."""
    if not 1 <= rank <= d:
        raise ValueError(f"rank must lie in [1, {d}], got {rank}")
    g = _ginibre(make_rng(rng), d, rank)
    a = g @ g.conj().T
    a = 0.5 * (a + a.conj().T)
    return DensityMatrix(a / np.trace(a).real)


def haar_unitary(d: int, rng) -> np.ndarray:
    """Haar unitary: QR of a Ginibre matrix with the phases of ``diag(R)`` divided out."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    q, r = np.linalg.qr(_ginibre(make_rng(rng), d, d))
    diag = np.diag(r)
    return q * (diag / np.abs(diag))


def pvm_from_unitary(u: np.ndarray) -> Povm:
    """Rank-1 projectors onto the columns of a unitary."""
    u = np.asarray(u, dtype=np.complex128)
    return Povm(np.einsum("ai,bi->iab", u, u.conj()))


def random_pvm(d: int, rng) -> Povm:
    return pvm_from_unitary(haar_unitary(d, rng))


def computational_pvm(d: int) -> Povm:
    return pvm_from_unitary(np.eye(d))


def trivial_povm(d: int) -> Povm:
    """The single-outcome measurement ``{identity}``."""
    return Povm(np.eye(d, dtype=np.complex128)[None])


def random_povm(d: int, m: int, rng, max_tries: int = 10) -> Povm:
    """Random ``m``-outcome POVM by symmetric normalization.

    Draws ``A_i = G_i G_i^dagger`` and returns ``E_i = S^{-1/2} A_i S^{-1/2}``
    with ``S = sum_i A_i``. A draw whose ``S`` is numerically singular is
    discarded; ``RuntimeError`` after ``max_tries`` discarded draws.
    """
    if m < 2:
        raise ValueError(f"a random POVM needs at least 2 outcomes, got {m}")
    rng = make_rng(rng)
    for _ in range(max_tries):
        gs = _ginibre(rng, m * d, d).reshape(m, d, d)
        a = gs @ gs.conj().transpose(0, 2, 1)
        s = a.sum(axis=0)
        s = 0.5 * (s + s.conj().T)
        w, v = linalg.hermitian_eig(s)
        if w[0] <= DEFAULT_TOL.eig_floor * max(1.0, w[-1]):
            continue
        s_inv_half = (v / np.sqrt(w)) @ v.conj().T
        els = s_inv_half @ a @ s_inv_half
        els = 0.5 * (els + els.conj().transpose(0, 2, 1))
        return Povm(els)
    raise RuntimeError(f"random_povm: S singular in {max_tries} consecutive draws")


def theorem1_example() -> tuple[DensityMatrix, Povm, Povm]:
    """Qubit instance whose KD entry exceeds the smaller marginal.

    State ``|0><0|``; X measures in the Hadamard basis ``{|+>, |->}``; Y
    projects onto ``(sqrt(3)|0> + |1>)/2`` and its complement.
    """
    x_basis, y_basis = theorem1_bases()
    return pure_state([1.0, 0.0]), pvm_from_unitary(x_basis), pvm_from_unitary(y_basis)


def theorem1_bases() -> tuple[np.ndarray, np.ndarray]:
    """Unitaries whose columns are the X and Y bases of ``theorem1_example``."""
    s3 = np.sqrt(3.0)
    return (
        np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / np.sqrt(2.0),
        np.array([[s3, 1.0], [1.0, -s3]], dtype=np.complex128) / 2.0,
    )

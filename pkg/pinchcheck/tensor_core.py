"""Pointwise multilinear algebra for curvature-type tensors.

All tensors are dense numpy arrays whose trailing axes are the tensor indices;
any leading axes are batch axes (grid points or random samples), so every
operation here is applied pointwise and vectorized over the batch.

Index convention: all indices are covariant. Where a metric is needed it is
passed explicitly; in an orthonormal frame pass ``None`` (identity).
"""
import enum
import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np

from .errors import DimensionError, SymmetryError

logger = logging.getLogger(__name__)

MIN_DIM = 4
MAX_DIM = 8

Scalar = Union[float, np.ndarray]


def check_dim(n: int) -> int:
    """Validate a manifold dimension and return it as int."""
    if not MIN_DIM <= int(n) <= MAX_DIM:
        raise DimensionError(f"Dimension must satisfy {MIN_DIM} <= n <= {MAX_DIM}; got {n}")
    return int(n)


class Symmetry(enum.Flag):
    """Symmetry flags carried by 4-index tensors."""
    NONE = 0
    ANTISYM12 = enum.auto()
    ANTISYM34 = enum.auto()
    PAIR = enum.auto()
    BIANCHI = enum.auto()
    TRACEFREE = enum.auto()

    @classmethod
    def riemann(cls) -> "Symmetry":
        return cls.ANTISYM12 | cls.ANTISYM34 | cls.PAIR | cls.BIANCHI

    @classmethod
    def weyl(cls) -> "Symmetry":
        return cls.riemann() | cls.TRACEFREE


def _frozen(values: np.ndarray) -> np.ndarray:
    values = np.array(values, dtype=float)
    values.flags.writeable = False
    return values


def _batch_scalar(s: Scalar, rank: int) -> Union[float, np.ndarray]:
    """Broadcast a scalar or batch of scalars against trailing tensor axes."""
    if np.ndim(s) == 0:
        return float(s)
    return np.asarray(s, dtype=float)[(...,) + (None,) * rank]


def _inverse(g: Optional["Sym2"], n: int) -> np.ndarray:
    if g is None:
        return np.eye(n)
    return np.linalg.inv(g.values)


@dataclass(frozen=True)
class Sym2:
    """Symmetric 2-tensor (or a batch of them) with shape (..., n, n)."""
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim < 2 or v.shape[-1] != v.shape[-2]:
            raise DimensionError(f"Sym2 needs trailing shape (n, n); got {v.shape}")
        check_dim(v.shape[-1])
        object.__setattr__(self, "values", _frozen(0.5 * (v + np.swapaxes(v, -1, -2))))

    @property
    def dim(self) -> int:
        return self.values.shape[-1]

    @property
    def batch_shape(self) -> Tuple[int, ...]:
        return self.values.shape[:-2]

    @classmethod
    def identity(cls, n: int, batch_shape: Tuple[int, ...] = ()) -> "Sym2":
        return cls(np.broadcast_to(np.eye(check_dim(n)), batch_shape + (n, n)))

    def trace(self, g: Optional["Sym2"] = None) -> Scalar:
        """Metric trace g^{ij} A_ij (plain trace when g is None)."""
        ginv = _inverse(g, self.dim)
        return np.einsum("...ij,...ij->...", ginv, self.values)

    def square(self) -> "Sym2":
        """Matrix square (A^2)_ij = A_ik A_kj in an orthonormal frame."""
        return Sym2(np.einsum("...ik,...kj->...ij", self.values, self.values))

    def norm2(self) -> Scalar:
        return np.einsum("...ij,...ij->...", self.values, self.values)

    def __add__(self, other: "Sym2") -> "Sym2":
        _same_dim(self, other)
        return Sym2(self.values + other.values)

    def __sub__(self, other: "Sym2") -> "Sym2":
        _same_dim(self, other)
        return Sym2(self.values - other.values)

    def __mul__(self, s: Scalar) -> "Sym2":
        return Sym2(self.values * _batch_scalar(s, 2))

    __rmul__ = __mul__

    def __neg__(self) -> "Sym2":
        return Sym2(-self.values)


@dataclass(frozen=True)
class Tensor3:
    """3-index tensor with shape (..., n, n, n); no symmetry is imposed."""
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim < 3 or not v.shape[-1] == v.shape[-2] == v.shape[-3]:
            raise DimensionError(f"Tensor3 needs trailing shape (n, n, n); got {v.shape}")
        check_dim(v.shape[-1])
        object.__setattr__(self, "values", _frozen(v))

    @property
    def dim(self) -> int:
        return self.values.shape[-1]

    def norm2(self) -> Scalar:
        return np.einsum("...ijk,...ijk->...", self.values, self.values)


@dataclass(frozen=True)
class Alg4:
    """4-index tensor with declared symmetry flags.

    Construct through :meth:`project`, which enforces ``flags`` by projection
    and records how far the input was from the symmetry class in ``residual``.
    """
    values: np.ndarray
    flags: Symmetry = Symmetry.NONE
    residual: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim < 4 or len(set(v.shape[-4:])) != 1:
            raise DimensionError(f"Alg4 needs trailing shape (n, n, n, n); got {v.shape}")
        check_dim(v.shape[-1])
        object.__setattr__(self, "values", _frozen(v))

    @property
    def dim(self) -> int:
        return self.values.shape[-1]

    @property
    def batch_shape(self) -> Tuple[int, ...]:
        return self.values.shape[:-4]

    @classmethod
    def project(cls, values: np.ndarray, flags: Symmetry, g: Optional[Sym2] = None) -> "Alg4":
        """Project ``values`` onto the symmetry class ``flags``.

        Args:
            values: Raw array of shape (..., n, n, n, n)
            flags: Symmetries to enforce
            g: Metric used for trace removal (identity when None)

        Returns:
            Alg4: Projected tensor; ``residual`` is max |values - projected|
        """
        raw = np.asarray(values, dtype=float)
        out = raw
        if flags & Symmetry.ANTISYM12:
            out = 0.5 * (out - np.swapaxes(out, -4, -3))
        if flags & Symmetry.ANTISYM34:
            out = 0.5 * (out - np.swapaxes(out, -2, -1))
        if flags & Symmetry.PAIR:
            out = 0.5 * (out + _swap_pairs(out))
        if flags & Symmetry.BIANCHI:
            out = out - _bianchi_sum(out) / 3.0
        if flags & Symmetry.TRACEFREE:
            out = _remove_traces(out, g)
        residual = float(np.max(np.abs(out - raw))) if raw.size else 0.0
        return cls(out, flags, residual)

    def symmetry_residuals(self, g: Optional[Sym2] = None) -> dict:
        return symmetry_residuals(self.values, g)

    def require(self, flags: Symmetry, what: str = "tensor", tol: float = 1e-10) -> None:
        """Raise SymmetryError unless ``flags`` are declared or hold to ``tol``."""
        missing = flags & ~self.flags
        if not missing:
            return
        scale = max(1.0, float(np.max(np.abs(self.values)))) if self.values.size else 1.0
        residuals = symmetry_residuals(self.values)
        for flag in Symmetry:
            if flag in missing and flag is not Symmetry.NONE and residuals[flag.name] > tol * scale:
                raise SymmetryError(
                    f"{what} must satisfy {flag.name}; residual {residuals[flag.name]:.3e}"
                )

    def _combine(self, other: "Alg4", values: np.ndarray) -> "Alg4":
        _same_dim(self, other)
        return Alg4(values, self.flags & other.flags, max(self.residual, other.residual))

    def __add__(self, other: "Alg4") -> "Alg4":
        return self._combine(other, self.values + other.values)

    def __sub__(self, other: "Alg4") -> "Alg4":
        return self._combine(other, self.values - other.values)

    def __mul__(self, s: Scalar) -> "Alg4":
        return Alg4(self.values * _batch_scalar(s, 4), self.flags, self.residual)

    __rmul__ = __mul__

    def __neg__(self) -> "Alg4":
        return Alg4(-self.values, self.flags, self.residual)


def _same_dim(a, b) -> None:
    if a.dim != b.dim:
        raise DimensionError(f"Dimension mismatch: {a.dim} vs {b.dim}")


def _swap_pairs(t: np.ndarray) -> np.ndarray:
    return np.moveaxis(t, (-4, -3, -2, -1), (-2, -1, -4, -3))


def _bianchi_sum(t: np.ndarray) -> np.ndarray:
    """Cyclic sum T_ijkl + T_iklj + T_iljk over the last three indices."""
    # out[i,j,k,l] = t[i,k,l,j] and t[i,l,j,k]
    t_klj = np.moveaxis(t, (-3, -2, -1), (-2, -1, -3))
    t_ljk = np.moveaxis(t, (-3, -2, -1), (-1, -3, -2))
    return t + t_klj + t_ljk


def _ricci_contraction(t: np.ndarray, ginv: np.ndarray) -> np.ndarray:
    return np.einsum("...ik,...ijkl->...jl", ginv, t)


def _remove_traces(t: np.ndarray, g: Optional[Sym2]) -> np.ndarray:
    n = t.shape[-1]
    gv = np.broadcast_to(np.eye(n), t.shape[:-4] + (n, n)) if g is None else g.values
    ginv = _inverse(g, n)
    ric = _ricci_contraction(t, ginv)
    ric = 0.5 * (ric + np.swapaxes(ric, -1, -2))
    scal = np.einsum("...ij,...ij->...", ginv, ric)
    ric0 = ric - (scal / n)[..., None, None] * gv
    return (t
            - _kn(ric0, gv) / (n - 2)
            - (scal / (2.0 * n * (n - 1)))[..., None, None, None, None] * _kn(gv, gv))


def symmetry_residuals(t: np.ndarray, g: Optional[Sym2] = None) -> dict:
    """Max absolute violation of each symmetry flag."""
    n = t.shape[-1]
    ginv = _inverse(g, n)
    ric = _ricci_contraction(t, ginv)
    traces = (
        np.max(np.abs(ric)),
        np.max(np.abs(np.einsum("...il,...ijkl->...jk", ginv, t))),
        np.max(np.abs(np.einsum("...ij,...ijkl->...kl", ginv, t))),
    )
    return {
        Symmetry.ANTISYM12.name: float(np.max(np.abs(t + np.swapaxes(t, -4, -3)))),
        Symmetry.ANTISYM34.name: float(np.max(np.abs(t + np.swapaxes(t, -2, -1)))),
        Symmetry.PAIR.name: float(np.max(np.abs(t - _swap_pairs(t)))),
        Symmetry.BIANCHI.name: float(np.max(np.abs(_bianchi_sum(t)))),
        Symmetry.TRACEFREE.name: float(max(traces)),
    }


def _kn(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    t = np.einsum("...ik,...jl->...ijkl", a, b)
    t = t - np.swapaxes(t, -1, -2)
    return t - np.swapaxes(t, -4, -3)


def kulkarni_nomizu(a: Sym2, b: Sym2) -> Alg4:
    """Kulkarni-Nomizu product.

    (A o B)_ijkl = A_ik B_jl - A_il B_jk + A_jl B_ik - A_jk B_il
    """
    _same_dim(a, b)
    return Alg4(_kn(a.values, b.values), Symmetry.ANTISYM12 | Symmetry.ANTISYM34 | Symmetry.PAIR)


def inner(a: Alg4, b: Alg4) -> Scalar:
    """Full contraction sum_{ijkl} A_ijkl B_ijkl (orthonormal components)."""
    _same_dim(a, b)
    return np.einsum("...ijkl,...ijkl->...", a.values, b.values)


def norm2(a: Alg4) -> Scalar:
    return inner(a, a)


def tracefree_project(a: Sym2, g: Optional[Sym2] = None) -> Sym2:
    """Remove the g-trace: A - (tr_g A / n) g."""
    n = a.dim
    gv = Sym2.identity(n, a.batch_shape) if g is None else g
    if gv.dim != n:
        raise DimensionError(f"Dimension mismatch: {n} vs {gv.dim}")
    tr = a.trace(g)
    return a - gv * (tr / n)


def weyl_from_riemann(riem: Alg4, ric: Sym2, scalar: Scalar, g: Optional[Sym2] = None,
                      tol: float = 1e-8) -> Alg4:
    """Weyl tensor from the traceless-Ricci form of the curvature decomposition.

    W = Riem - 1/(n-2) (Ric0 o g) - R / (2n(n-1)) (g o g)

    Args:
        riem: Riemann tensor (covariant)
        ric: Ricci tensor, expected to equal g^{ik} R_ijkl
        scalar: Scalar curvature, expected to equal tr_g Ric
        g: Metric (identity when None)
        tol: Relative tolerance of the trace-consistency check

    Returns:
        Alg4: Weyl tensor flagged Riemann-type and totally tracefree

    Raises:
        SymmetryError: If Ric or R is inconsistent with the traces of Riem
    """
    n = riem.dim
    _same_dim(riem, ric)
    gs = Sym2.identity(n, ric.batch_shape) if g is None else g
    ginv = _inverse(g, n)
    scale = max(1.0, float(np.max(np.abs(ric.values))))
    ric_err = float(np.max(np.abs(_ricci_contraction(riem.values, ginv) - ric.values)))
    scal_err = float(np.max(np.abs(ric.trace(g) - scalar)))
    if ric_err > tol * scale or scal_err > tol * n * scale:
        raise SymmetryError(
            f"Ricci data inconsistent with Riemann traces: "
            f"ricci residual {ric_err:.3e}, scalar residual {scal_err:.3e}"
        )
    ric0 = ric - gs * (np.asarray(scalar) / n)
    w = (riem.values
         - kulkarni_nomizu(ric0, gs).values / (n - 2)
         - _batch_scalar(np.asarray(scalar) / (2.0 * n * (n - 1)), 4) * _kn(gs.values, gs.values))
    return Alg4.project(w, Symmetry.weyl(), g)


def cubic_weyl_form(w: Alg4) -> Scalar:
    """2 W_ijkl W_ipkq W_pjql + 1/2 W_ijkl W_klpq W_pqij (orthonormal components)."""
    w.require(Symmetry.weyl(), "cubic form argument")
    v = w.values
    first = np.einsum("...ijkl,...ipkq,...pjql->...", v, v, v, optimize=True)
    second = np.einsum("...ijkl,...klpq,...pqij->...", v, v, v, optimize=True)
    return 2.0 * first + 0.5 * second


def weyl_ricci_ricci(w: Alg4, a: Sym2, b: Optional[Sym2] = None) -> Scalar:
    """W_ijkl A_jl B_ik."""
    b = a if b is None else b
    return np.einsum("...ijkl,...jl,...ik->...", w.values, a.values, b.values, optimize=True)


def cubic_trace(a: Sym2) -> Scalar:
    """A_ij A_jk A_ki."""
    v = a.values
    return np.einsum("...ij,...jk,...ki->...", v, v, v, optimize=True)


def riemann_contraction_split(riem: Alg4, phi: Sym2) -> Tuple[Scalar, Scalar]:
    """Both sides of the curvature decomposition of R_ijkl phi_jl phi_ik.

    The right-hand side is
    W(phi0, phi0) + 2/(n-2) [((n-2)/n) tr(phi) <Ric0, phi0> - Ric0 phi0 phi0]
    + R/(n(n-1)) [((n-1)/n) tr(phi)^2 - |phi0|^2], in orthonormal components.

    Returns:
        Tuple: (lhs, rhs), pointwise
    """
    _same_dim(riem, phi)
    riem.require(Symmetry.riemann(), "Riemann tensor")
    n = riem.dim
    ric = Sym2(_ricci_contraction(riem.values, np.eye(n)))
    scalar = ric.trace()
    w = weyl_from_riemann(riem, ric, scalar)
    ric0 = tracefree_project(ric)
    phi0 = tracefree_project(phi)
    t = phi.trace()
    lhs = np.einsum("...ijkl,...jl,...ik->...", riem.values, phi.values, phi.values, optimize=True)
    mixed = np.einsum("...ij,...jk,...ki->...", ric0.values, phi0.values, phi0.values, optimize=True)
    rhs = (weyl_ricci_ricci(w, phi0)
           + 2.0 / (n - 2) * ((n - 2) / n * t * np.einsum("...ij,...ij->...", ric0.values, phi0.values) - mixed)
           + scalar / (n * (n - 1)) * ((n - 1) / n * t ** 2 - phi0.norm2()))
    return lhs, rhs


def orthonormal_frame(g: Sym2) -> np.ndarray:
    """Frame E with E^T g E = I, built from the Cholesky factor of g."""
    chol = np.linalg.cholesky(g.values)
    return np.swapaxes(np.linalg.inv(chol), -1, -2)


def frame_components(values: np.ndarray, frame: np.ndarray) -> np.ndarray:
    """Orthonormal-frame components of a covariant tensor of any rank."""
    rank = values.ndim - frame.ndim + 2
    out = values
    for axis in range(rank):
        # contract tensor axis `axis` (counted from the first tensor axis) with E^i_a
        pos = out.ndim - rank + axis
        out = np.moveaxis(np.einsum("...i,...ia->...a", np.moveaxis(out, pos, -1),
                                    _expand_frame(frame, rank - 1)), -1, pos)
    return out


def _expand_frame(frame: np.ndarray, extra: int) -> np.ndarray:
    # insert axes so the frame broadcasts over the remaining tensor axes
    idx = (...,) + (None,) * extra + (slice(None), slice(None))
    return frame[idx]


def random_tracefree(rng: np.random.Generator, n: int, size: int) -> Sym2:
    """Batch of tracefree symmetric matrices with standard normal entries."""
    a = rng.standard_normal((size, n, n))
    a = 0.5 * (a + np.swapaxes(a, -1, -2))
    return tracefree_project(Sym2(a))


def random_weyl(rng: np.random.Generator, n: int, size: int) -> Alg4:
    """Batch of Weyl-type tensors: a normal n^4 array projected onto the Weyl class."""
    raw = rng.standard_normal((size,) + (check_dim(n),) * 4)
    w = Alg4.project(raw, Symmetry.weyl())
    return Alg4(w.values, w.flags, 0.0)

"""
Closed-form eigen decomposition for 2x2 and 3x3 real matrices.

Roots come from the characteristic polynomial (quadratic formula, or the
trigonometric / Cardano forms of the depressed cubic) and get one Newton
polish. Eigenvectors are null vectors of ``M - lambda I`` built from cross
products of its rows. The batch routine :func:`eigvals` works on stacks of
matrices and is what the exponent engines call at every quadrature node.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RealLine",
    "ComplexPlane",
    "Spectrum",
    "FloquetExponents",
    "eigen",
    "eigvals",
    "charpoly",
    "floquet_from_monodromy",
    "order_by_modulus",
]

_REPEAT_REL = 1e-12
_TRIPLE_REL = 1e-24


@dataclass(frozen=True)
class RealLine:
    value: float
    direction: np.ndarray


@dataclass(frozen=True)
class ComplexPlane:
    """Invariant plane of a conjugate pair; ``value`` has positive imaginary part."""

    value: complex
    basis: np.ndarray  # (2, n), orthonormal rows


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    structures: tuple
    repeated: bool = False
    defective: bool = False

    @property
    def real_parts(self) -> np.ndarray:
        return self.eigenvalues.real.copy()

    @property
    def is_real(self) -> np.ndarray:
        return self.eigenvalues.imag == 0


@dataclass(frozen=True)
class FloquetExponents:
    """Real and imaginary parts of ``(1/T) log`` of the monodromy eigenvalues.

    Imaginary parts sit in the principal branch ``(-pi/T, pi/T]``; the true
    exponents may differ from them by multiples of ``2 pi / T``.
    """

    real: np.ndarray
    imag: np.ndarray
    T: float


def charpoly(M) -> np.ndarray:
    """Monic characteristic polynomial coefficients, highest degree first."""
    M = np.asarray(M, dtype=float)
    n = M.shape[-1]
    tr = np.trace(M, axis1=-2, axis2=-1)
    if n == 2:
        det = M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
        return np.stack([np.ones_like(tr), -tr, det], axis=-1)
    if n == 3:
        minors = (M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
                  + M[..., 0, 0] * M[..., 2, 2] - M[..., 0, 2] * M[..., 2, 0]
                  + M[..., 1, 1] * M[..., 2, 2] - M[..., 1, 2] * M[..., 2, 1])
        return np.stack([np.ones_like(tr), -tr, minors, -_det3(M)], axis=-1)
    raise ValueError(f"only 2x2 and 3x3 matrices are supported, got {n}x{n}")


def _det3(M):
    return (M[..., 0, 0] * (M[..., 1, 1] * M[..., 2, 2] - M[..., 1, 2] * M[..., 2, 1])
            - M[..., 0, 1] * (M[..., 1, 0] * M[..., 2, 2] - M[..., 1, 2] * M[..., 2, 0])
            + M[..., 0, 2] * (M[..., 1, 0] * M[..., 2, 1] - M[..., 1, 1] * M[..., 2, 0]))


def _polyval(c, z):
    out = np.ones_like(z)
    for k in range(1, c.shape[-1]):
        out = out * z + c[..., k, None]
    return out


def _polyder_val(c, z):
    deg = c.shape[-1] - 1
    out = deg * np.ones_like(z)
    for k in range(1, deg):
        out = out * z + (deg - k) * c[..., k, None]
    return out


def _roots2(c):
    tr, det = -c[:, 1], c[:, 2]
    disc = tr * tr - 4.0 * det
    rep = np.abs(disc) <= _REPEAT_REL * (tr * tr + 4.0 * np.abs(det))
    roots = np.empty((c.shape[0], 2), dtype=complex)

    real = (disc > 0) & ~rep
    sq = np.sqrt(np.where(real, disc, 0.0))
    r1 = 0.5 * (tr + np.copysign(sq, tr))
    safe = np.where(r1 != 0, r1, 1.0)
    r2 = np.where(r1 != 0, det / safe, 0.5 * (tr - np.copysign(sq, tr)))
    roots[:, 0] = np.where(real, r1, 0.5 * tr)
    roots[:, 1] = np.where(real, r2, 0.5 * tr)

    cplx = (disc < 0) & ~rep
    im = 0.5 * np.sqrt(np.where(cplx, -disc, 0.0))
    roots[cplx, 0] = 0.5 * tr[cplx] + 1j * im[cplx]
    roots[cplx, 1] = 0.5 * tr[cplx] - 1j * im[cplx]
    return roots, rep


def _roots3(c):
    c2, c1, c0 = c[:, 1], c[:, 2], c[:, 3]
    shift = -c2 / 3.0
    p = c1 - c2 * c2 / 3.0
    q = 2.0 * c2 ** 3 / 27.0 - c2 * c1 / 3.0 + c0
    D = (0.5 * q) ** 2 + (p / 3.0) ** 3
    S = (0.5 * q) ** 2 + np.abs(p / 3.0) ** 3
    s = np.maximum.reduce([np.abs(c2) / 3.0, np.sqrt(np.abs(c1) / 3.0), np.cbrt(np.abs(c0))])
    triple = S <= _TRIPLE_REL * s ** 6
    rep = triple | (np.abs(D) <= _REPEAT_REL * S)
    roots = np.zeros((c.shape[0], 3), dtype=complex)

    three = (D < 0) & ~rep
    if three.any():
        pp, qq = p[three], q[three]
        m = 2.0 * np.sqrt(-pp / 3.0)
        arg = np.clip(1.5 * qq / pp * np.sqrt(-3.0 / pp), -1.0, 1.0)
        phi = np.arccos(arg) / 3.0
        for k in range(3):
            roots[three, k] = m * np.cos(phi - 2.0 * np.pi * k / 3.0)

    one = (D > 0) & ~rep
    if one.any():
        pp, qq, dd = p[one], q[one], D[one]
        u = -np.copysign(np.cbrt(0.5 * np.abs(qq) + np.sqrt(dd)), qq)
        v = np.where(u != 0, -pp / (3.0 * np.where(u != 0, u, 1.0)), 0.0)
        roots[one, 0] = u + v
        roots[one, 1] = -0.5 * (u + v) + 0.5j * math.sqrt(3.0) * np.abs(u - v)
        roots[one, 2] = np.conj(roots[one, 1])

    dbl = rep & ~triple
    if dbl.any():
        pp, qq = p[dbl], q[dbl]
        roots[dbl, 0] = 3.0 * qq / pp
        roots[dbl, 1] = -1.5 * qq / pp
        roots[dbl, 2] = -1.5 * qq / pp

    roots += shift[:, None]
    return roots, rep


def _polish(c, roots, rep):
    """One guarded Newton step per root; conjugate pairs stay conjugate."""
    z = roots.copy()
    p0 = _polyval(c, z)
    dp = _polyder_val(c, z)
    ok = (dp != 0) & ~rep[:, None] & (z.imag >= 0)
    with np.errstate(over="ignore", invalid="ignore"):
        zn = z - np.where(ok, p0 / np.where(dp != 0, dp, 1.0), 0.0)
    ok &= np.isfinite(zn)
    zn = np.where(z.imag == 0, zn.real + 0j, zn)
    z = np.where(ok & (np.abs(_polyval(c, zn)) <= np.abs(p0)), zn, z)
    # the root builders always place the negative member right after its partner
    rows, cols = np.nonzero(roots.imag < 0)
    z[rows, cols] = np.conj(z[rows, cols - 1])
    return z


def _sorted(roots):
    order = np.lexsort((-roots.imag, -roots.real), axis=-1)
    return np.take_along_axis(roots, order, axis=-1)


def _roots(M):
    M = np.asarray(M, dtype=float)
    batch = M.reshape(-1, M.shape[-2], M.shape[-1])
    c = charpoly(batch)
    roots, rep = (_roots2 if batch.shape[-1] == 2 else _roots3)(c)
    roots = _polish(c, roots, rep)
    return _sorted(roots), rep


def eigvals(M) -> np.ndarray:
    """Eigenvalues of a matrix or a stack of 2x2/3x3 matrices.

    Each row is sorted by descending real part, ties by descending imaginary
    part. The result has shape ``M.shape[:-1]`` and complex dtype.
    """
    M = np.asarray(M, dtype=float)
    if M.shape[-1] != M.shape[-2] or M.shape[-1] not in (2, 3):
        raise ValueError(f"expected 2x2 or 3x3 matrices, got shape {M.shape}")
    roots, _ = _roots(M)
    return roots.reshape(M.shape[:-1])


def order_by_modulus(ev: np.ndarray) -> np.ndarray:
    """Reorder eigenvalue rows by descending modulus, ties by descending imaginary part."""
    order = np.lexsort((-ev.imag, -np.abs(ev)), axis=-1)
    return np.take_along_axis(ev, order, axis=-1)


def _canonical(v):
    v = v / np.linalg.norm(v)
    k = int(np.argmax(np.abs(v)))
    return -v if v[k] < 0 else v


def _orthonormal_complement(r):
    r = r / np.linalg.norm(r)
    k = int(np.argmin(np.abs(r)))
    e = np.zeros(3)
    e[k] = 1.0
    a = e - np.dot(e, r) * r
    a /= np.linalg.norm(a)
    b = np.cross(r, a)
    return [a, b]


def _null_vectors(M, lam, repeated, multiplicity):
    """Null vectors of M - lam I (real lam) or one complex null vector."""
    n = M.shape[0]
    B = M - lam * np.eye(n)
    scale = max(np.linalg.norm(M), 1e-300)
    if n == 2:
        cands = [np.array([-B[0, 1], B[0, 0]]), np.array([-B[1, 1], B[1, 0]])]
        norms = [np.linalg.norm(v) for v in cands]
        k = int(np.argmax(norms))
        if repeated and norms[k] <= 1e-8 * scale:
            return [np.eye(2)[0], np.eye(2)[1]][:multiplicity]
        return [cands[k]]
    rows = [B[0], B[1], B[2]]
    cands = [np.cross(rows[0], rows[1]), np.cross(rows[0], rows[2]), np.cross(rows[1], rows[2])]
    norms = [np.linalg.norm(v) for v in cands]
    k = int(np.argmax(norms))
    if repeated and norms[k] <= 1e-8 * scale * scale:
        rnorms = [np.linalg.norm(r) for r in rows]
        j = int(np.argmax(rnorms))
        if rnorms[j] <= 1e-8 * scale:
            return list(np.eye(3))[:multiplicity]
        return _orthonormal_complement(rows[j].real)[:multiplicity]
    return [cands[k]]


def _plane_basis(v):
    # rotate the phase so Re v and Im v come out orthogonal
    theta = 0.5 * np.angle(np.dot(v, v))
    v = v * np.exp(-1j * theta)
    a, b = v.real, v.imag
    a = a / np.linalg.norm(a)
    b = b - np.dot(b, a) * a
    b = b / np.linalg.norm(b)
    return np.vstack([a, b])


def eigen(M) -> Spectrum:
    """Eigenvalues plus eigenvectors / eigenplanes of a real 2x2 or 3x3 matrix."""
    M = np.asarray(M, dtype=float)
    if M.shape not in ((2, 2), (3, 3)):
        raise ValueError(f"expected a 2x2 or 3x3 matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    roots, rep = _roots(M)
    ev = roots[0]
    repeated = bool(rep[0])
    structures = []
    defective = False
    seen = []
    for lam in ev:
        if lam.imag < 0:
            continue
        if lam.imag > 0:
            v = _null_vectors(M.astype(complex), lam, False, 1)[0]
            structures.append(ComplexPlane(complex(lam), _plane_basis(v)))
            continue
        if any(abs(lam.real - s) <= 1e-12 * max(1.0, abs(s)) for s in seen):
            continue
        seen.append(lam.real)
        mult = int(np.sum(np.abs(ev - lam) <= 1e-12 * max(1.0, abs(lam)))) if repeated else 1
        vecs = _null_vectors(M, lam.real, repeated, mult)
        if len(vecs) < mult:
            defective = True
        structures.extend(RealLine(float(lam.real), _canonical(v)) for v in vecs)
    return Spectrum(ev, tuple(structures), repeated, defective)


def floquet_from_monodromy(Phi, T: float | None = None) -> FloquetExponents:
    """Generalized Floquet exponents from a principal fundamental matrix.

    ``Phi`` is either a :class:`~aportrait.integrator.FundamentalMatrix` or a
    bare matrix together with the window length ``T``.
    """
    if T is None:
        T = Phi.t1 - Phi.t0
        mat = Phi.Phi
    else:
        mat = getattr(Phi, "Phi", Phi)
    if not T > 0:
        raise ValueError("window length must be positive")
    mu = eigvals(mat)
    mod = np.abs(mu)
    if np.any(mod < 1e-300):
        raise ValueError("singular monodromy")
    real = np.log(mod) / T
    imag = np.angle(mu) / T
    order = np.lexsort((-imag, -real))
    return FloquetExponents(real[order], imag[order], float(T))

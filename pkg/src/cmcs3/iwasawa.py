"""Numerical loop-group machinery.

Loops S^1 -> 2x2 complex matrices are held as truncated Fourier series.  The
central operation factorizes a loop Phi with det = 1 into a unitary loop F
and a "plus" loop B (holomorphic in the disk, B(0) upper triangular with
positive diagonal):

    Phi = F B.

B is obtained from the matrix spectral factorization B*B = Phi*Phi on the
unit circle by a Bauer-type block-Toeplitz Cholesky step.  Because S = Phi*Phi
is a trigonometric matrix polynomial of band 2N, its spectral factor is a
matrix polynomial of degree at most 2N, and the first block row of the
triangular Toeplitz factor recovers its coefficients without truncation
error.  A Wilson fixed-point iteration is kept as a fallback refinement for
badly conditioned inputs.
"""

from dataclasses import dataclass, field

import numpy as np

from . import loop_algebra as la
from .errors import ConditioningError, ConvergenceError, PreconditionError

_I2 = np.eye(2, dtype=complex)


def expm_traceless(a):
    """exp of traceless 2x2 matrices, vectorized over leading axes.

    Uses exp(A) = cosh(q) I + sinh(q)/q A with q^2 = -det A; any branch of
    the square root gives the same result since cosh and sinh/q are even.
    """
    a = np.asarray(a, dtype=complex)
    det = a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
    q = np.sqrt(-det.astype(complex))
    small = np.abs(q) < 1e-5
    qs = np.where(small, 1.0, q)
    sinhc = np.where(small, 1.0 + q * q / 6.0 + q**4 / 120.0, np.sinh(qs) / qs)
    return np.cosh(q)[..., None, None] * _I2 + sinhc[..., None, None] * a


def inv2(m):
    """Inverse of 2x2 matrices with unit determinant (vectorized)."""
    out = np.empty_like(m)
    out[..., 0, 0] = m[..., 1, 1]
    out[..., 1, 1] = m[..., 0, 0]
    out[..., 0, 1] = -m[..., 0, 1]
    out[..., 1, 0] = -m[..., 1, 0]
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    return out / det[..., None, None]


def circle_points(m):
    return np.exp(2j * np.pi * np.arange(m) / m)


@dataclass(frozen=True)
class FourierLoop:
    """Truncated Fourier series C_{-N} ... C_N of a loop S^1 -> C^{2x2}."""

    n: int
    coeffs: np.ndarray  # shape (2n+1, 2, 2); coeffs[k + n] multiplies lam^k
    loop_class: str = field(default="general", compare=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (2 * self.n + 1, 2, 2):
            raise PreconditionError(f"expected shape {(2 * self.n + 1, 2, 2)}, got {c.shape}")
        object.__setattr__(self, "coeffs", c)

    def coeff(self, k):
        if -self.n <= k <= self.n:
            return self.coeffs[k + self.n]
        return np.zeros((2, 2), dtype=complex)

    def evaluate(self, lam):
        lam = np.asarray(lam, dtype=complex)
        powers = lam[..., None] ** np.arange(-self.n, self.n + 1)
        return np.einsum("...k,kij->...ij", powers, self.coeffs)

    def samples(self, m):
        """Values at the m-th roots of unity (exact for m >= 2n+1)."""
        if m < 2 * self.n + 1:
            raise PreconditionError("sample count below Nyquist for this loop")
        pad = np.zeros((m, 2, 2), dtype=complex)
        for k in range(-self.n, self.n + 1):
            pad[k % m] += self.coeffs[k + self.n]
        return np.fft.ifft(pad, axis=0) * m

    def scale(self):
        return max(np.max(np.abs(self.coeffs)), 1e-300)

    def trimmed(self, tol=1e-13):
        norms = np.max(np.abs(self.coeffs), axis=(1, 2))
        keep = np.nonzero(norms > tol * self.scale())[0]
        if keep.size == 0:
            return FourierLoop(0, np.zeros((1, 2, 2), complex), self.loop_class)
        half = max(abs(int(keep[0]) - self.n), abs(int(keep[-1]) - self.n))
        lo, hi = self.n - half, self.n + half
        return FourierLoop(half, self.coeffs[lo: hi + 1], self.loop_class)


def identity_loop():
    c = np.zeros((1, 2, 2), dtype=complex)
    c[0] = _I2
    return FourierLoop(0, c, "unitary")


def coeffs_from_samples(samples):
    """Centered Fourier coefficients (k = -m/2 .. m/2-1) from circle samples."""
    m = samples.shape[0]
    raw = np.fft.fft(samples, axis=0) / m
    ks = np.arange(-(m // 2), m - m // 2)
    return ks, raw[ks % m]


def loop_from_samples(samples, tail_tol, loop_class="general"):
    """Build a FourierLoop from circle samples, or None if the tail is fat."""
    ks, cs = coeffs_from_samples(samples)
    norms = np.max(np.abs(cs), axis=(1, 2))
    scale = max(norms.max(), 1e-300)
    m = samples.shape[0]
    guard = norms[(np.abs(ks) >= m // 4)]
    if guard.size and guard.max() > tail_tol * scale:
        return None
    sig = np.nonzero(norms > tail_tol * scale)[0]
    half = int(max(abs(ks[sig[0]]), abs(ks[sig[-1]]))) if sig.size else 0
    out = np.zeros((2 * half + 1, 2, 2), dtype=complex)
    mask = np.abs(ks) <= half
    out[ks[mask] + half] = cs[mask]
    return FourierLoop(half, out, loop_class)


def exp_loop(xi, z, tail_tol=1e-12, max_samples=4096):
    """Fourier loop of lam -> exp(z xi(lam)), adaptively truncated."""
    m = 64
    while m <= max_samples:
        lam = circle_points(m)
        a = complex(z) * la.evaluate(xi, lam)
        samples = expm_traceless(a)
        loop = loop_from_samples(samples, tail_tol)
        if loop is not None:
            return loop
        m *= 2
    raise ConvergenceError(
        f"exp loop tail above {tail_tol} at {max_samples} samples", residual=None
    )


@dataclass(frozen=True)
class FramePoint:
    z: complex
    f: FourierLoop
    b: FourierLoop
    unitarity_defect: float
    reconstruction_defect: float


def _bauer_factor(s_coeffs, band, blocks):
    """Spectral factor coefficients from a block-Toeplitz Cholesky section.

    s_coeffs maps k -> S_k for |k| <= band.  Factors the finite section
    T[i, j] = S_{j-i} as U^H U and reads B_0 ... B_{band} from the last fully
    banded block row of U, where the recursion has converged; then
    S(lam) = B(lam)^* B(lam) on the circle with B_0 upper triangular,
    positive diagonal.
    """
    m = blocks
    if m < band + 2:
        m = band + 2
    t = np.zeros((m, 2, m, 2), dtype=complex)
    for k in range(-band, band + 1):
        sk = s_coeffs.get(k)
        if sk is None:
            continue
        i = np.arange(max(0, -k), min(m, m - k))
        t[i, :, i + k, :] = sk
    t = t.reshape(2 * m, 2 * m)
    try:
        c = np.linalg.cholesky(np.conj(t))
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(f"block-Toeplitz matrix lost positive definiteness: {exc}")
    u = c.T  # T = U^H U with U upper triangular, positive diagonal
    r = m - 1 - band
    return np.stack(
        [u[2 * r : 2 * r + 2, 2 * (r + k) : 2 * (r + k) + 2] for k in range(band + 1)]
    )


def _unitary_polish(f_samples):
    """Project samples onto the unitary group (polar decomposition).

    For 2x2 Hermitian positive H = F^H F near the identity, the principal
    square root is (H + sqrt(det H) I)/sqrt(tr H + 2 sqrt(det H)).
    """
    h = np.conj(np.transpose(f_samples, (0, 2, 1))) @ f_samples
    det = h[..., 0, 0] * h[..., 1, 1] - h[..., 0, 1] * h[..., 1, 0]
    sq = np.sqrt(det.real)
    tr = (h[..., 0, 0] + h[..., 1, 1]).real
    root = (h + sq[..., None, None] * _I2) / np.sqrt(tr + 2.0 * sq)[..., None, None]
    return f_samples @ inv2_general(root)


def _plus_project(samples, halve_zero=True):
    """Project circle samples onto nonnegative Fourier modes."""
    m = samples.shape[0]
    ks, cs = coeffs_from_samples(samples)
    keep = np.zeros_like(cs)
    pos = ks > 0
    keep[pos] = cs[pos]
    zero = ks == 0
    keep[zero] = 0.5 * cs[zero] if halve_zero else cs[zero]
    pad = np.zeros((m, 2, 2), dtype=complex)
    for k, ck in zip(ks[pos | zero], keep[pos | zero]):
        pad[k % m] += ck
    return np.fft.ifft(pad, axis=0) * m


def _wilson_refine(s_samples, b_samples, max_iter=50, tol=1e-13):
    """Wilson fixed-point refinement of the right spectral factor.

    Iterates B <- P_+[B^{-*} S B^{-1} + 1]/2 . B, which converges
    quadratically to the factor with S = B*B once in its basin.
    """
    b = b_samples
    for _ in range(max_iter):
        binv = inv2_general(b)
        g = np.conj(np.transpose(binv, (0, 2, 1))) @ s_samples @ binv
        step = _plus_project(g + _I2)
        b_new = step @ b
        rel = np.max(np.abs(b_new - b)) / max(np.max(np.abs(b)), 1e-300)
        b = b_new
        if rel < tol:
            break
    return b


def inv2_general(m):
    """Inverse of general 2x2 matrices (vectorized)."""
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    if np.any(np.abs(det) < 1e-300):
        raise ConditioningError("singular 2x2 matrix in loop inversion")
    out = np.empty_like(m)
    out[..., 0, 0] = m[..., 1, 1]
    out[..., 1, 1] = m[..., 0, 0]
    out[..., 0, 1] = -m[..., 0, 1]
    out[..., 1, 0] = -m[..., 1, 0]
    return out / det[..., None, None]


def _normalize_b0(b_coeffs, f_samples=None, b_samples=None):
    """Rotate the plus factor so B(0) is upper triangular, positive diagonal."""
    b0 = b_coeffs[0]
    q, r = np.linalg.qr(b0)
    phases = np.diag(r).copy()
    phases = phases / np.abs(phases)
    v = q * phases[None, :]
    vh = np.conj(v.T)
    f_out = f_samples @ v[None] if f_samples is not None else None
    b_out = vh[None] @ b_samples if b_samples is not None else None
    return vh[None] @ b_coeffs, f_out, b_out


def iwasawa_factor(phi, tol=1e-9, tail_tol=1e-12, max_samples=8192):
    """Split a det-1 loop into unitary and plus factors, Phi = F B.

    Bauer block-Toeplitz factorization of S = Phi^H Phi seeds the plus
    factor; Wilson iteration rescues a poor seed; a final polar projection
    of the unitary samples removes the conditioning floor of F = Phi B^{-1}.
    The causality of B = F^H Phi and the loop reconstruction Phi = F B are
    the structural checks.
    """
    n = phi.n
    m = 1
    while m < max(8 * (n + 1), 64):
        m *= 2
    while True:
        phi_s = phi.samples(m)
        sh = np.conj(np.transpose(phi_s, (0, 2, 1)))
        s_s = sh @ phi_s
        ks, s_cs = coeffs_from_samples(s_s)
        band = 2 * n
        s_map = {int(k): s_cs[idx] for idx, k in enumerate(ks) if abs(k) <= band}
        b_coeffs = _bauer_factor(s_map, band, max(4 * n, 8))
        b_pad = np.zeros((m, 2, 2), dtype=complex)
        for k in range(min(band + 1, m)):
            b_pad[k % m] += b_coeffs[k]
        b_s = np.fft.ifft(b_pad, axis=0) * m
        f_s = phi_s @ inv2_general(b_s)
        if _unitarity_defect(f_s) > 1e-3:
            b_s = _wilson_refine(s_s, b_s)
            f_s = phi_s @ inv2_general(b_s)
            if _unitarity_defect(f_s) > 1e-3:
                raise ConvergenceError(
                    "spectral factorization failed to seed the unitary factor",
                    residual=_unitarity_defect(f_s),
                )
        # Polar projection onto the unitary group, then recompute the plus
        # factor exactly from it; its acausal tail measures the residual.
        f_s = _unitary_polish(f_s)
        b_s = np.conj(np.transpose(f_s, (0, 2, 1))) @ phi_s
        ks_b, b_cs = coeffs_from_samples(b_s)
        scale = max(np.max(np.abs(b_cs)), 1e-300)
        acausal = np.max(np.abs(b_cs[ks_b < 0])) / scale if np.any(ks_b < 0) else 0.0
        if acausal > tol:
            raise ConvergenceError(
                f"plus factor has acausal energy {acausal:.3e}", residual=float(acausal)
            )
        b_coeffs = np.zeros((band + 1, 2, 2), dtype=complex)
        for idx, k in enumerate(ks_b):
            if 0 <= k <= band:
                b_coeffs[int(k)] = b_cs[idx]
        b_coeffs, f_s, _ = _normalize_b0(b_coeffs, f_s, None)
        defect = _unitarity_defect(f_s)
        if defect > tol:
            raise ConvergenceError(
                f"unitarity defect {defect:.3e} above tolerance {tol}",
                residual=float(defect),
            )
        f_loop = loop_from_samples(f_s, tail_tol)
        if f_loop is None:
            if m >= max_samples:
                raise ConvergenceError("unitary factor tail not resolved", residual=None)
            m *= 2
            continue
        b_centered = np.zeros((2 * band + 1, 2, 2), dtype=complex)
        b_centered[band:] = b_coeffs
        b_loop = FourierLoop(band, b_centered, "plus").trimmed(tail_tol)
        f_loop = FourierLoop(f_loop.n, f_loop.coeffs, "unitary")
        recon = np.max(np.abs(f_loop.samples(m) @ b_loop.samples(m) - phi_s)) / phi.scale()
        return f_loop, b_loop, float(defect), float(recon)


def _unitarity_defect(f_samples):
    gram = f_samples @ np.conj(np.transpose(f_samples, (0, 2, 1)))
    return float(np.max(np.abs(gram - _I2)))


def frame(xi, z, tol=1e-9, tail_tol=1e-12):
    """Extended frame at z: unitary factor of the split of exp(z xi)."""
    if z == 0:
        ident = identity_loop()
        return FramePoint(0j, ident, identity_loop(), 0.0, 0.0)
    phi = exp_loop(xi, z, tail_tol=tail_tol)
    f, b, defect, recon = iwasawa_factor(phi, tol=tol, tail_tol=tail_tol)
    if recon > 100 * tol:
        raise ConvergenceError(f"reconstruction defect {recon:.3e}", residual=recon)
    return FramePoint(complex(z), f, b, defect, recon)


def killing_field(xi, z, tol=1e-6, return_residual=False):
    """Transport the matrix polynomial along the surface: F^{-1} xi F at z.

    The conjugated loop is re-projected onto Laurent degrees -1..g; the
    dropped energy is the projection residual.
    """
    fp = frame(xi, z)
    m = 1
    while m < max(8 * (fp.f.n + xi.g + 2), 64):
        m *= 2
    lam = circle_points(m)
    f_s = fp.f.samples(m)
    xi_s = la.evaluate(xi, lam)
    zeta_s = inv2(f_s) @ xi_s @ f_s
    # Multiply by lam so the result is a plain Fourier series starting at 0.
    ks, cs = coeffs_from_samples(lam[:, None, None] * zeta_s)
    out = np.zeros((xi.g + 2, 2, 2), dtype=complex)
    resid = 0.0
    for idx, k in enumerate(ks):
        if 0 <= k <= xi.g + 1:
            out[k] = cs[idx]
        else:
            resid = max(resid, float(np.max(np.abs(cs[idx]))))
    resid /= xi.scale()
    if resid > tol:
        raise ConvergenceError(f"Laurent projection residual {resid:.3e}", residual=resid)
    zeta = la.LaurentMatrix(xi.g, out, validate=False)
    if return_residual:
        return zeta, resid
    return zeta


def monodromy(xi, tau, tol=1e-9):
    """Monodromy loop M(lam) = F(lam) at z = tau (base point z = 0).

    Returns the loop together with the trace function Delta(lam) = tr M.
    """
    fp = frame(xi, tau, tol=tol)
    loop = fp.f

    def delta(lam):
        vals = loop.evaluate(lam)
        return vals[..., 0, 0] + vals[..., 1, 1]

    return loop, delta


def integrate_frame_ode(alpha, z, lam, steps=400):
    """Cross-check route: integrate dF = F alpha along the segment 0 -> z.

    alpha(z, lam) must return the pair (alpha', alpha'') multiplying dz and
    d(conj z).  Classical RK4 with fixed steps; used only to validate closed
    forms on the example families.
    """
    z = complex(z)
    f = _I2.copy()
    h = 1.0 / steps
    for j in range(steps):
        t = j * h

        def rhs(fm, tt):
            ap, app = alpha(tt * z, lam)
            return fm @ (ap * z + app * np.conj(z))

        k1 = rhs(f, t)
        k2 = rhs(f + 0.5 * h * k1, t + 0.5 * h)
        k3 = rhs(f + 0.5 * h * k2, t + 0.5 * h)
        k4 = rhs(f + h * k3, t + h)
        f = f + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return f

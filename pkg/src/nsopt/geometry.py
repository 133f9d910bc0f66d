"""Constraint-set descriptors and exact projection / linear-minimization kernels.

Supports Euclidean balls, l1 balls, and nuclear-norm balls centered at the
origin.  All kernels are pure functions; the only randomness is the start
vector of the power iteration behind the nuclear-ball LMO, drawn from an
explicit generator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError


def project_l2_ball(x: np.ndarray, radius: float) -> np.ndarray:
    """Radial projection onto the Euclidean ball of the given radius."""
    nrm = float(np.linalg.norm(x))
    if nrm <= radius:
        return np.array(x, dtype=float, copy=True)
    return np.asarray(x, dtype=float) * (radius / nrm)


def project_l1_ball(x: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto the l1 ball via sort and threshold.

    Points inside the ball are returned unchanged.  Otherwise the result is
    the soft-thresholding ``sign(x) * max(|x| - theta, 0)`` with the unique
    ``theta >= 0`` satisfying ``sum(max(|x_i| - theta, 0)) == radius``.
    """
    x = np.asarray(x, dtype=float)
    a = np.abs(x)
    if a.sum() <= radius:
        return x.copy()
    s = np.sort(a)[::-1]
    cumulative = np.cumsum(s)
    counts = np.arange(1, x.size + 1)
    # Largest prefix whose shifted values stay positive fixes the threshold.
    ok = s - (cumulative - radius) / counts > 0
    rho = int(np.nonzero(ok)[0][-1])
    theta = (cumulative[rho] - radius) / (rho + 1)
    return np.sign(x) * np.maximum(a - theta, 0.0)


def lmo_l1_ball(g: np.ndarray, radius: float) -> np.ndarray:
    """Extreme point of the l1 ball minimizing ``<g, s>``.

    Ties on ``|g_i|`` break toward the lowest index and ``sign(0)`` is
    taken as ``+1``, so the output is deterministic.
    """
    g = np.asarray(g, dtype=float)
    i = int(np.argmax(np.abs(g)))
    s = np.zeros_like(g)
    s[i] = -radius if g[i] >= 0 else radius
    return s


def full_svd(a: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Full SVD of a dense matrix, raising ``NumericalError`` on failure."""
    try:
        return np.linalg.svd(np.asarray(a, dtype=float), full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed to converge: {exc}") from exc


def project_nuclear_ball(x: np.ndarray, radius: float) -> np.ndarray:
    """Frobenius-nearest point of the nuclear-norm ball.

    Projects the singular values onto the l1 ball of the given radius and
    reconstructs, which is exact because the nuclear norm is the l1 norm of
    the spectrum.
    """
    u, s, vt = full_svd(x)
    if s.sum() <= radius:
        return np.array(x, dtype=float, copy=True)
    s_proj = project_l1_ball(s, radius)
    return (u * s_proj) @ vt


def top_singular_pair(a: np.ndarray, tol: float = 1e-10, max_iter: int = 10000,
                      rng=None) -> tuple[float, np.ndarray, np.ndarray]:
    """Dominant singular triple of ``a`` by power iteration on ``a^T a``.

    Returns ``(sigma, u, v)`` with unit vectors and ``u = a v / sigma``.
    Iteration stops once the pair residual ``||a^T u - sigma v||`` falls
    below ``tol * sigma``, or once the Rayleigh value stalls; near-equal
    leading singular values rotate the pair arbitrarily slowly while the
    value is already converged, and any vector in the leading subspace is
    acceptable there.  The start vector comes from ``rng`` (a fixed-seed
    generator when omitted), so results are deterministic per seed.

    Raises ``ValueError`` on a zero matrix and ``NumericalError`` when
    neither criterion triggers within ``max_iter`` sweeps.
    """
    a = np.asarray(a, dtype=float)
    if not np.any(a):
        raise ValueError("top singular pair of the zero matrix is undefined")
    gen = rng if rng is not None else np.random.Generator(np.random.Philox(0))
    v = gen.standard_normal(a.shape[1])
    v /= np.linalg.norm(v)

    def polish(v_cur, w_cur):
        # Rayleigh-Ritz over span {v, a^T a v}: near-equal leading singular
        # values rotate the power iterate arbitrarily slowly, but the top
        # pair already lies in this 2-D span, so a 2-column SVD extracts it.
        basis, _ = np.linalg.qr(np.column_stack([v_cur, w_cur]))
        _, _, wt = np.linalg.svd(a @ basis, full_matrices=False)
        v_new = basis @ wt[0]
        return v_new / np.linalg.norm(v_new)

    stall_rel = 1e-6
    burn_in = 8
    polish_period = 16
    sigma_prev = -1.0
    stall_hits = 0
    polish_gain_small = False
    for sweep in range(max_iter):
        av = a @ v
        sigma = float(np.linalg.norm(av))
        if sigma == 0.0:
            # Start vector fell in the null space; redraw.
            v = gen.standard_normal(a.shape[1])
            v /= np.linalg.norm(v)
            continue
        u = av / sigma
        atu = a.T @ u
        if np.linalg.norm(atu - sigma * v) <= tol * sigma:
            return sigma, u, v
        w = atu / np.linalg.norm(atu)
        if sweep >= burn_in and sigma - sigma_prev <= stall_rel * sigma:
            stall_hits += 1
            if stall_hits >= 2:
                if polish_gain_small:
                    return sigma, u, v
                v_new = polish(v, w)
                gain = float(np.linalg.norm(a @ v_new)) - sigma
                polish_gain_small = gain <= stall_rel * sigma
                v = v_new
                stall_hits = 0
                sigma_prev = -1.0
                continue
        else:
            stall_hits = 0
        if sweep % polish_period == polish_period - 1:
            v = polish(v, w)
            sigma_prev = -1.0
        else:
            sigma_prev = sigma
            v = w
    raise NumericalError(f"power iteration did not converge in {max_iter} sweeps")


def lmo_nuclear_ball(g: np.ndarray, radius: float, tol: float = 1e-10,
                     max_iter: int = 10000, rng=None) -> np.ndarray:
    """Rank-1 extreme point of the nuclear ball minimizing ``<g, s>``.

    Computes the top singular pair of ``g`` and returns ``-radius * u v^T``.
    A zero input, where every direction ties, maps to a fixed canonical
    vertex so the output stays deterministic.
    """
    g = np.asarray(g, dtype=float)
    if not np.any(g):
        s = np.zeros_like(g)
        s[0, 0] = -radius
        return s
    _, u, v = top_singular_pair(g, tol=tol, max_iter=max_iter, rng=rng)
    return -radius * np.outer(u, v)


@dataclass(frozen=True)
class SetDescriptor:
    """An origin-centered norm ball: kind, radius, and ambient shape.

    ``shape`` is ``(d,)`` for vector sets and ``(m, p)`` for the nuclear
    ball; solvers work on flattened vectors and the descriptor reinterprets
    the shape inside its kernels.
    """

    kind: str
    radius: float
    shape: tuple[int, ...]

    _KINDS = ("l2_ball", "l1_ball", "nuclear_ball")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown set kind {self.kind!r}")
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.kind == "nuclear_ball" and len(self.shape) != 2:
            raise ValueError("nuclear ball needs a matrix shape (m, p)")
        if self.kind != "nuclear_ball" and len(self.shape) != 1:
            raise ValueError(f"{self.kind} needs a vector shape (d,)")

    @property
    def dim(self) -> int:
        return int(np.prod(self.shape))

    @property
    def diameter(self) -> float:
        # Euclidean diameter is 2r for all three kinds.
        return 2.0 * self.radius

    @property
    def enclosing_radius(self) -> float:
        # ||.||_2 <= ||.||_1 and ||.||_F <= ||.||_nuc, so B(0, r) encloses.
        return self.radius

    def norm(self, x: np.ndarray) -> float:
        """The norm defining the ball, evaluated on a flat vector."""
        x = np.asarray(x, dtype=float)
        if self.kind == "l2_ball":
            return float(np.linalg.norm(x))
        if self.kind == "l1_ball":
            return float(np.abs(x).sum())
        return float(np.linalg.svd(x.reshape(self.shape), compute_uv=False).sum())

    def membership_residual(self, x: np.ndarray) -> float:
        return max(0.0, self.norm(x) - self.radius)

    def contains(self, x: np.ndarray, tol: float = 1e-8) -> bool:
        return self.membership_residual(x) <= tol

    def project(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "l2_ball":
            return project_l2_ball(x, self.radius)
        if self.kind == "l1_ball":
            return project_l1_ball(x, self.radius)
        return project_nuclear_ball(x.reshape(self.shape), self.radius).ravel()

    def lmo(self, g: np.ndarray, rng=None, tol: float = 1e-10,
            max_iter: int = 10000) -> np.ndarray:
        g = np.asarray(g, dtype=float)
        if self.kind == "l1_ball":
            return lmo_l1_ball(g, self.radius)
        if self.kind == "l2_ball":
            nrm = float(np.linalg.norm(g))
            if nrm == 0.0:
                s = np.zeros_like(g)
                s[0] = -self.radius
                return s
            return -self.radius / nrm * g
        return lmo_nuclear_ball(g.reshape(self.shape), self.radius,
                                tol=tol, max_iter=max_iter, rng=rng).ravel()

    def boundary_point(self, rng) -> np.ndarray:
        """A random point with norm exactly ``radius`` (rank-1 for the
        nuclear ball), used to draw starting iterates."""
        if self.kind == "l2_ball":
            u = rng.standard_normal(self.dim)
            return self.radius * u / np.linalg.norm(u)
        if self.kind == "l1_ball":
            w = rng.exponential(size=self.dim)
            w /= w.sum()
            signs = rng.integers(0, 2, size=self.dim) * 2.0 - 1.0
            return self.radius * signs * w
        m, p = self.shape
        u = rng.standard_normal(m)
        v = rng.standard_normal(p)
        u /= np.linalg.norm(u)
        v /= np.linalg.norm(v)
        return (self.radius * np.outer(u, v)).ravel()


def l2_ball(dim: int, radius: float) -> SetDescriptor:
    return SetDescriptor("l2_ball", float(radius), (int(dim),))


def l1_ball(dim: int, radius: float) -> SetDescriptor:
    return SetDescriptor("l1_ball", float(radius), (int(dim),))


def nuclear_ball(rows: int, cols: int, radius: float) -> SetDescriptor:
    return SetDescriptor("nuclear_ball", float(radius), (int(rows), int(cols)))

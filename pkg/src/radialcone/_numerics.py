"""Grid-level numerical helpers shared by the solver and the diagnostics.

All arrays live on the staggered centres ``r_j = (j + 1/2) h``.  ``parity``
describes how a field continues across ``r = 0``: ``-1`` odd (``u``, ``u_t``),
``+1`` even (``u_r``, densities), ``None`` unknown (one-sided stencils).
"""
import numpy as np

_GAUSS = 0.5 / np.sqrt(3.0)


def _ghost_left(a, parity, k):
    # values at r_{-1}, ..., r_{-k} ordered left to right
    return parity * a[..., :k][..., ::-1]


def radial_derivative(a, h, parity=-1):
    """Fourth-order ``d/dr`` of ``a`` along its last axis.

    Centred everywhere except the two outermost points, which use one-sided
    fourth-order stencils; near the origin the ghost values come from
    ``parity`` (one-sided as well when ``parity`` is None).
    """
    a = np.asarray(a, dtype=float)
    J = a.shape[-1]
    if J < 5:
        raise ValueError("need at least 5 grid points for a fourth-order derivative")
    out = np.empty_like(a)
    out[..., 2:-2] = (a[..., :-4] - 8.0 * a[..., 1:-3] + 8.0 * a[..., 3:-1] - a[..., 4:]) / (12.0 * h)
    if parity is None:
        out[..., 0] = (-25 * a[..., 0] + 48 * a[..., 1] - 36 * a[..., 2] + 16 * a[..., 3] - 3 * a[..., 4]) / (12.0 * h)
        out[..., 1] = (-3 * a[..., 0] - 10 * a[..., 1] + 18 * a[..., 2] - 6 * a[..., 3] + a[..., 4]) / (12.0 * h)
    else:
        g = _ghost_left(a, parity, 2)  # [a_{-2}, a_{-1}]
        am2, am1 = g[..., 0], g[..., 1]
        out[..., 0] = (am2 - 8.0 * am1 + 8.0 * a[..., 1] - a[..., 2]) / (12.0 * h)
        out[..., 1] = (am1 - 8.0 * a[..., 0] + 8.0 * a[..., 2] - a[..., 3]) / (12.0 * h)
    b = a[..., ::-1]
    out[..., -1] = -(-25 * b[..., 0] + 48 * b[..., 1] - 36 * b[..., 2] + 16 * b[..., 3] - 3 * b[..., 4]) / (12.0 * h)
    out[..., -2] = -(-3 * b[..., 0] - 10 * b[..., 1] + 18 * b[..., 2] - 6 * b[..., 3] + b[..., 4]) / (12.0 * h)
    return out


def radial_weights(r, n):
    return r ** (n - 1)


def radial_integral(values, h, upper, n):
    """``int_0^upper values(r) r^(n-1) dr`` for each row of ``values``.

    Whole cells use the midpoint rule; the trailing partial cell integrates a
    cubic Lagrange interpolant of the weighted integrand with 2-point Gauss.
    ``upper`` is a scalar or one value per row.
    """
    values = np.asarray(values, dtype=float)
    one_d = values.ndim == 1
    V = np.atleast_2d(values)
    S, J = V.shape
    uppers = np.broadcast_to(np.asarray(upper, dtype=float), (S,))
    if np.any(uppers < 0) or np.any(uppers > J * h * (1 + 1e-12)):
        raise ValueError("integration limit outside [0, R]")
    r = (np.arange(J) + 0.5) * h
    G = V * radial_weights(r, n)
    csum = np.concatenate([np.zeros((S, 1)), np.cumsum(G, axis=1)], axis=1) * h

    k = np.floor(uppers / h + 1e-9).astype(int)
    k = np.minimum(k, J)
    full = csum[np.arange(S), k]
    a = k * h
    width = uppers - a
    has_part = width > 1e-12 * h
    if not np.any(has_part) or J < 4:
        out = full
    else:
        start = np.clip(k - 2, 0, J - 4)
        nodes = r[start[:, None] + np.arange(4)[None, :]]  # (S, 4)
        vals = G[np.arange(S)[:, None], start[:, None] + np.arange(4)[None, :]]
        part = np.zeros(S)
        for off in (0.5 - _GAUSS, 0.5 + _GAUSS):
            x = a + off * width
            basis = np.ones((S, 4))
            for i in range(4):
                for m in range(4):
                    if m != i:
                        basis[:, i] *= (x - nodes[:, m]) / (nodes[:, i] - nodes[:, m])
            part += 0.5 * width * np.sum(basis * vals, axis=1)
        out = full + np.where(has_part, part, 0.0)
    return float(out[0]) if one_d else out


def observed_orders(errors):
    """``log2`` ratios of consecutive errors (coarse to fine)."""
    e = np.asarray(errors, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log2(e[:-1] / e[1:])


def _half_cell_weights(offsets):
    # integral over [-1/2, 0] (units of h, relative to centre j) of each
    # Lagrange basis polynomial through the given node offsets
    P = np.polynomial.polynomial
    weights = []
    for i, oi in enumerate(offsets):
        poly = np.array([1.0])
        for m, om in enumerate(offsets):
            if m != i:
                poly = P.polymul(poly, np.array([-om, 1.0]) / (oi - om))
        anti = P.polyint(poly)
        weights.append(P.polyval(0.0, anti) - P.polyval(-0.5, anti))
    return np.array(weights)


_HALF_LEFT = _half_cell_weights((0, 1, 2, 3))
_HALF_MID = _half_cell_weights((-1, 0, 1, 2))
_HALF_RIGHT = _half_cell_weights((-2, -1, 0, 1))


def cumulative_radial_integral(values, h, n):
    """``int_0^{r_j} values(r) r^(n-1) dr`` at every centre ``r_j``.

    Midpoint rule over whole cells plus a cubic-interpolated half cell.
    """
    values = np.asarray(values, dtype=float)
    J = values.shape[-1]
    r = (np.arange(J) + 0.5) * h
    G = values * radial_weights(r, n)
    whole = np.concatenate([np.zeros(values.shape[:-1] + (1,)), np.cumsum(G, axis=-1)[..., :-1]], axis=-1)
    half = np.empty_like(G)
    half[..., 0] = G[..., 0:4] @ _HALF_LEFT
    idx = np.arange(1, J - 2)
    stencil = idx[:, None] + np.arange(-1, 3)[None, :]
    half[..., 1:J - 2] = np.einsum("...ik,k->...i", G[..., stencil], _HALF_MID)
    for j in (J - 2, J - 1):
        offsets = tuple(range(J - 4 - j, J - j))
        half[..., j] = G[..., J - 4:J] @ _half_cell_weights(offsets)
    return h * (whole + half)

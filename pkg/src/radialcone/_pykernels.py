"""Pure numpy implementation of the hot kernels.

Mirrors ``_ckernels.pyx`` formula for formula.  Used when the compiled
extension is unavailable, for custom profiles without a kernel code, and as
the reference in the backend-equivalence tests.

Grid coefficient arrays (all on cell centres ``r_j``):

``c1``  ``(n-1)/r``            first-derivative coefficient
``c2``  ``(n-1)/(2 r^2)``       sphere potential coefficient
``ca``  ``r^-alpha``            singular potential coefficient
"""
import numpy as np

CODE_LINEAR = 0
CODE_CUBIC = 1
CODE_ADKINS_NAPPI = 2
CODE_POWER = 3
CODE_SINE = 4


def ffp_values(u, code, param):
    """``f(u) f'(u)`` for a built-in kernel code."""
    if code == CODE_LINEAR:
        return u * 1.0
    if code == CODE_CUBIC:
        u2 = u * u
        return 3.0 * u2 * u2 * u
    if code == CODE_ADKINS_NAPPI:
        s = np.sin(u)
        return (u - s * np.cos(u)) * (2.0 * s * s)
    if code == CODE_POWER:
        return param * np.sign(u) * np.abs(u) ** (2.0 * param - 1.0)
    if code == CODE_SINE:
        return np.sin(u) * np.cos(u)
    raise ValueError(f"no kernel formula for profile code {code}")


def fsq_values(u, code, param):
    """``f(u)**2`` for a built-in kernel code."""
    if code == CODE_LINEAR:
        return u * u
    if code == CODE_CUBIC:
        u2 = u * u
        return u2 * u2 * u2
    if code == CODE_ADKINS_NAPPI:
        f = u - np.sin(u) * np.cos(u)
        return f * f
    if code == CODE_POWER:
        return np.abs(u) ** (2.0 * param)
    if code == CODE_SINE:
        s = np.sin(u)
        return s * s
    raise ValueError(f"no kernel formula for profile code {code}")


def spatial_operator(u, h, c1, c2, ca, code, param, odd=True, ffp=None):
    """Second-order staggered discretisation of the radial operator.

    Origin ghost is ``-u[0]`` (odd extension, so ``u(t, 0) = 0``) or ``+u[0]``
    when ``odd`` is false; the outer ghost enforces ``u(R) = 0``.
    """
    g = np.empty(u.shape[0] + 2)
    g[1:-1] = u
    g[0] = -u[0] if odd else u[0]
    g[-1] = -u[-1]
    inv_h2 = 1.0 / (h * h)
    lap = (g[2:] - 2.0 * u + g[:-2]) * inv_h2
    grad = (g[2:] - g[:-2]) * (0.5 / h)
    ff = ffp(u) if ffp is not None else ffp_values(u, code, param)
    return lap + c1 * grad - c2 * np.sin(2.0 * u) - ca * ff


def rk4_step(u, v, dt, h, c1, c2, ca, code, param, odd=True, forcing=None, ffp=None):
    """One classical Runge-Kutta step of ``u_t = v, v_t = L[u] + F``.

    ``forcing`` is ``None`` or a triple of arrays evaluated at ``t``,
    ``t + dt/2`` and ``t + dt``.
    """
    if forcing is None:
        f0 = fh = f1 = 0.0
    else:
        f0, fh, f1 = forcing

    def accel(w, extra):
        return spatial_operator(w, h, c1, c2, ca, code, param, odd, ffp) + extra

    half = 0.5 * dt
    k1u = v
    k1v = accel(u, f0)
    k2u = v + half * k1v
    k2v = accel(u + half * k1u, fh)
    k3u = v + half * k2v
    k3v = accel(u + half * k2u, fh)
    k4u = v + dt * k3v
    k4v = accel(u + dt * k3u, f1)
    sixth = dt / 6.0
    u_new = u + sixth * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
    v_new = v + sixth * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return u_new, v_new


def discrete_energy(u, v, h, wc, wf, c2, ca, code, param, fsq=None):
    """Staggered-grid energy: kinetic and potential on centres, gradient on faces.

    ``wc`` holds ``r^(n-1)`` on the J centres and ``wf`` on the J+1 faces.
    """
    g = np.empty(u.shape[0] + 2)
    g[1:-1] = u
    g[0] = -u[0]
    g[-1] = -u[-1]
    du = (g[1:] - g[:-1]) / h
    f2 = fsq(u) if fsq is not None else fsq_values(u, code, param)
    s = np.sin(u)
    centre = (0.5 * v * v + c2 * s * s + 0.5 * ca * f2) * wc
    face = 0.5 * du * du * wf
    return float(h * (centre.sum() + face.sum()))

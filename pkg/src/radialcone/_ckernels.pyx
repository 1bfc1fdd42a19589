# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: radial operator, RK4 step and discrete energy.

Formula-for-formula twin of ``_pykernels.py``; see that module for the
meaning of the coefficient arrays ``c1``, ``c2`` and ``ca``.  Only built-in
profile codes are supported here.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, pow, fabs, copysign

cnp.import_array()

cdef enum:
    CODE_LINEAR = 0
    CODE_CUBIC = 1
    CODE_ADKINS_NAPPI = 2
    CODE_POWER = 3
    CODE_SINE = 4


cdef inline double _ffp(double u, int code, double p) noexcept nogil:
    cdef double s, u2
    if code == CODE_LINEAR:
        return u
    elif code == CODE_CUBIC:
        u2 = u * u
        return 3.0 * u2 * u2 * u
    elif code == CODE_ADKINS_NAPPI:
        s = sin(u)
        return (u - s * cos(u)) * (2.0 * s * s)
    elif code == CODE_POWER:
        return p * copysign(pow(fabs(u), 2.0 * p - 1.0), u) if u != 0.0 else 0.0
    else:
        return sin(u) * cos(u)


cdef inline double _fsq(double u, int code, double p) noexcept nogil:
    cdef double f, u2, s
    if code == CODE_LINEAR:
        return u * u
    elif code == CODE_CUBIC:
        u2 = u * u
        return u2 * u2 * u2
    elif code == CODE_ADKINS_NAPPI:
        f = u - sin(u) * cos(u)
        return f * f
    elif code == CODE_POWER:
        return pow(fabs(u), 2.0 * p)
    else:
        s = sin(u)
        return s * s


cdef void _operator(const double[::1] u, double[::1] out, double h,
                    const double[::1] c1, const double[::1] c2,
                    const double[::1] ca, int code, double p, bint odd) noexcept nogil:
    cdef Py_ssize_t j, J = u.shape[0]
    cdef double left, right, inv_h2 = 1.0 / (h * h), half_inv_h = 0.5 / h
    for j in range(J):
        if j == 0:
            left = -u[0] if odd else u[0]
        else:
            left = u[j - 1]
        if j == J - 1:
            right = -u[J - 1]
        else:
            right = u[j + 1]
        out[j] = ((right - 2.0 * u[j] + left) * inv_h2
                  + c1[j] * ((right - left) * half_inv_h)
                  - c2[j] * sin(2.0 * u[j])
                  - ca[j] * _ffp(u[j], code, p))


def _check_code(int code):
    if code < CODE_LINEAR or code > CODE_SINE:
        raise ValueError(f"no kernel formula for profile code {code}")


def ffp_values(u, int code, double param):
    _check_code(code)
    cdef const double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    out = np.empty(uv.shape[0])
    cdef double[::1] o = out
    cdef Py_ssize_t j
    for j in range(uv.shape[0]):
        o[j] = _ffp(uv[j], code, param)
    return out


def fsq_values(u, int code, double param):
    _check_code(code)
    cdef const double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    out = np.empty(uv.shape[0])
    cdef double[::1] o = out
    cdef Py_ssize_t j
    for j in range(uv.shape[0]):
        o[j] = _fsq(uv[j], code, param)
    return out


def spatial_operator(const double[::1] u, double h, const double[::1] c1,
                     const double[::1] c2, const double[::1] ca,
                     int code, double param, bint odd=True, ffp=None):
    _check_code(code)
    out = np.empty(u.shape[0])
    cdef double[::1] o = out
    with nogil:
        _operator(u, o, h, c1, c2, ca, code, param, odd)
    return out


def rk4_step(const double[::1] u, const double[::1] v, double dt, double h,
             const double[::1] c1, const double[::1] c2, const double[::1] ca,
             int code, double param, bint odd=True, forcing=None, ffp=None):
    _check_code(code)
    cdef Py_ssize_t j, J = u.shape[0]
    cdef bint forced = forcing is not None
    cdef const double[::1] f0
    cdef const double[::1] fh
    cdef const double[::1] f1
    if forced:
        f0 = np.ascontiguousarray(forcing[0], dtype=np.float64)
        fh = np.ascontiguousarray(forcing[1], dtype=np.float64)
        f1 = np.ascontiguousarray(forcing[2], dtype=np.float64)
    else:
        zeros = np.zeros(J)
        f0 = zeros
        fh = zeros
        f1 = zeros

    work = np.empty((6, J))
    cdef double[:, ::1] w = work
    cdef double[::1] stage = w[0]
    cdef double[::1] acc = w[1]
    cdef double[::1] su = w[2]   # running sum of u increments
    cdef double[::1] sv = w[3]   # running sum of v increments
    cdef double[::1] vs = w[4]   # stage velocity
    cdef double[::1] us = w[5]   # stage displacement
    u_new = np.empty(J)
    v_new = np.empty(J)
    cdef double[::1] un = u_new
    cdef double[::1] vn = v_new
    cdef double half = 0.5 * dt, sixth = dt / 6.0

    with nogil:
        # stage 1
        _operator(u, acc, h, c1, c2, ca, code, param, odd)
        for j in range(J):
            acc[j] += f0[j]
            su[j] = v[j]
            sv[j] = acc[j]
            us[j] = u[j] + half * v[j]
            vs[j] = v[j] + half * acc[j]
        # stage 2
        _operator(us, acc, h, c1, c2, ca, code, param, odd)
        for j in range(J):
            acc[j] += fh[j]
            su[j] += 2.0 * vs[j]
            sv[j] += 2.0 * acc[j]
            stage[j] = vs[j]
            us[j] = u[j] + half * stage[j]
            vs[j] = v[j] + half * acc[j]
        # stage 3
        _operator(us, acc, h, c1, c2, ca, code, param, odd)
        for j in range(J):
            acc[j] += fh[j]
            su[j] += 2.0 * vs[j]
            sv[j] += 2.0 * acc[j]
            stage[j] = vs[j]
            us[j] = u[j] + dt * stage[j]
            vs[j] = v[j] + dt * acc[j]
        # stage 4
        _operator(us, acc, h, c1, c2, ca, code, param, odd)
        for j in range(J):
            acc[j] += f1[j]
            su[j] += vs[j]
            sv[j] += acc[j]
            un[j] = u[j] + sixth * su[j]
            vn[j] = v[j] + sixth * sv[j]
    return u_new, v_new


def discrete_energy(const double[::1] u, const double[::1] v, double h,
                    const double[::1] wc, const double[::1] wf,
                    const double[::1] c2, const double[::1] ca,
                    int code, double param, fsq=None):
    _check_code(code)
    cdef Py_ssize_t j, J = u.shape[0]
    cdef double centre = 0.0, face = 0.0, s, du, left, right
    with nogil:
        for j in range(J):
            s = sin(u[j])
            centre += (0.5 * v[j] * v[j] + c2[j] * s * s
                       + 0.5 * ca[j] * _fsq(u[j], code, param)) * wc[j]
        for j in range(J + 1):
            left = -u[0] if j == 0 else u[j - 1]
            right = -u[J - 1] if j == J else u[j]
            du = (right - left) / h
            face += 0.5 * du * du * wf[j]
    return h * (centre + face)

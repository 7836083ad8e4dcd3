# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Dormand-Prince 5(4) integrator for y' = (L0 + sum_k f_k(t) L_k) y.

Mirrors ``mscheme._integrator.dopri5_python`` step for step; see there for
the meaning of the arguments and the status codes.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, cos, sqrt, fabs, pow, isfinite, M_PI

cnp.import_array()

cdef double C2 = 1.0 / 5.0, C3 = 3.0 / 10.0, C4 = 4.0 / 5.0, C5 = 8.0 / 9.0
cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0, A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0, A63 = 46732.0 / 5247.0, A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0
cdef double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0, B4 = 125.0 / 192.0, B5 = -2187.0 / 6784.0, B6 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0, E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0


cdef inline double envelope(const double[:, ::1] env, Py_ssize_t k, double t, double tmid) noexcept nogil:
    cdef int shape = <int>env[k, 0]
    cdef double peak = env[k, 1], center = env[k, 2], width = env[k, 3]
    cdef double x
    if tmid < env[k, 4] or tmid > env[k, 5]:
        return 0.0
    if shape == 0:
        return peak
    x = (t - center) / width
    if shape == 1:
        return peak * exp(-2.0 * x * x)
    if fabs(x) >= 1.0:
        return 0.0
    x = cos(0.5 * M_PI * x)
    return peak * x * x


cdef void rhs(const double[:, ::1] L0, const double[:, :, ::1] Lk, const double[:, ::1] env,
              double t, double tmid, const double* y, double* out, Py_ssize_t M, Py_ssize_t K) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef double acc, f
    for i in range(M):
        acc = 0.0
        for j in range(M):
            acc = acc + L0[i, j] * y[j]
        out[i] = acc
    for k in range(K):
        f = envelope(env, k, t, tmid)
        if f == 0.0:
            continue
        for i in range(M):
            acc = 0.0
            for j in range(M):
                acc = acc + Lk[k, i, j] * y[j]
            out[i] = out[i] + f * acc


cdef double wrms(const double* v, const double* y, const double* y2, double rtol, double atol,
                 Py_ssize_t M) noexcept nogil:
    cdef Py_ssize_t i
    cdef double s = 0.0, sc, a, b
    for i in range(M):
        a = fabs(y[i])
        b = fabs(y2[i])
        sc = atol + rtol * (a if a > b else b)
        s = s + (v[i] / sc) * (v[i] / sc)
    return sqrt(s / M)


def dopri5(const double[:, ::1] L0, const double[:, :, ::1] Lk, const double[:, ::1] env,
           const double[::1] y0, double t0, const double[::1] stops, const cnp.uint8_t[::1] record,
           const cnp.uint8_t[::1] is_break, double rtol, double atol, long max_steps, double h_init):
    cdef Py_ssize_t M = y0.shape[0], K = Lk.shape[0], n_stops = stops.shape[0]
    cdef cnp.ndarray[double, ndim=2] work_arr = np.zeros((10, M))
    cdef double[:, ::1] w = work_arr
    cdef double* y = &w[0, 0]
    cdef double* k1 = &w[1, 0]
    cdef double* k2 = &w[2, 0]
    cdef double* k3 = &w[3, 0]
    cdef double* k4 = &w[4, 0]
    cdef double* k5 = &w[5, 0]
    cdef double* k6 = &w[6, 0]
    cdef double* k7 = &w[7, 0]
    cdef double* yt = &w[8, 0]
    cdef double* yn = &w[9, 0]
    cdef Py_ssize_t n_rec = 0, i, s_idx = 0, rec_idx = 0
    for i in range(n_stops):
        if record[i]:
            n_rec += 1
    out_arr = np.zeros((n_rec, M))
    cdef double[:, ::1] out = out_arr
    cdef double t = t0, h, t_stop, tmid, err, fac, d0, d1, d2, h0, h1, hh
    cdef double h_saved = 0.0, fac_max = 10.0
    cdef long n_steps = 0, n_rejected = 0
    cdef int status = 0, need_k1 = 1, hit
    cdef double* tmp

    for i in range(M):
        y[i] = y0[i]

    with nogil:
        # records that coincide with t0
        while s_idx < n_stops and stops[s_idx] <= t:
            if record[s_idx]:
                for i in range(M):
                    out[rec_idx, i] = y[i]
                rec_idx += 1
            s_idx += 1

        h = h_init
        if s_idx < n_stops and h <= 0.0:
            # Hairer's starting-step heuristic
            tmid = t + 1e-9 * (stops[s_idx] - t)
            rhs(L0, Lk, env, t, tmid, y, k1, M, K)
            d0 = wrms(y, y, y, rtol, atol, M)
            d1 = wrms(k1, y, y, rtol, atol, M)
            if d0 < 1e-5 or d1 < 1e-5:
                h0 = 1e-6
            else:
                h0 = 0.01 * d0 / d1
            hh = stops[n_stops - 1] - t
            if h0 > hh:
                h0 = hh
            for i in range(M):
                yt[i] = y[i] + h0 * k1[i]
            rhs(L0, Lk, env, t + h0, tmid, yt, k2, M, K)
            for i in range(M):
                k3[i] = (k2[i] - k1[i]) / h0
            d2 = wrms(k3, y, y, rtol, atol, M)
            if d1 > d2:
                d2 = d1
            if d2 <= 1e-15:
                h1 = h0 * 1e-3
                if h1 < 1e-6:
                    h1 = 1e-6
            else:
                h1 = pow(0.01 / d2, 0.2)
            h = 100.0 * h0
            if h1 < h:
                h = h1

        while s_idx < n_stops:
            if n_steps >= max_steps:
                status = 1
                break
            t_stop = stops[s_idx]
            hit = 0
            h_saved = h
            if t + 1.01 * h >= t_stop:
                h = t_stop - t
                hit = 1
            if h <= 1e-14 * (fabs(t) + 1.0):
                status = 2
                break
            tmid = t + 0.5 * h
            if need_k1:
                rhs(L0, Lk, env, t, tmid, y, k1, M, K)
                need_k1 = 0

            for i in range(M):
                yt[i] = y[i] + h * A21 * k1[i]
            rhs(L0, Lk, env, t + C2 * h, tmid, yt, k2, M, K)
            for i in range(M):
                yt[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
            rhs(L0, Lk, env, t + C3 * h, tmid, yt, k3, M, K)
            for i in range(M):
                yt[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
            rhs(L0, Lk, env, t + C4 * h, tmid, yt, k4, M, K)
            for i in range(M):
                yt[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
            rhs(L0, Lk, env, t + C5 * h, tmid, yt, k5, M, K)
            for i in range(M):
                yt[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
            rhs(L0, Lk, env, t + h, tmid, yt, k6, M, K)
            for i in range(M):
                yn[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i])
            rhs(L0, Lk, env, t + h, tmid, yn, k7, M, K)
            for i in range(M):
                yt[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
            err = wrms(yt, y, yn, rtol, atol, M)
            n_steps += 1

            if not isfinite(err):
                status = 3
                break

            if err <= 1.0:
                if hit:
                    t = t_stop
                else:
                    t = t + h
                for i in range(M):
                    y[i] = yn[i]
                tmp = k1
                k1 = k7
                k7 = tmp
                if err == 0.0:
                    fac = fac_max
                else:
                    fac = 0.9 * pow(err, -0.2)
                    if fac > fac_max:
                        fac = fac_max
                    if fac < 0.2:
                        fac = 0.2
                fac_max = 10.0
                if hit:
                    if record[s_idx]:
                        for i in range(M):
                            out[rec_idx, i] = y[i]
                        rec_idx += 1
                    if is_break[s_idx]:
                        need_k1 = 1
                    s_idx += 1
                h = h * fac
                if hit and h < h_saved:
                    # clipping onto a stop is not a controller decision
                    h = h_saved
            else:
                n_rejected += 1
                fac = 0.9 * pow(err, -0.2)
                if fac < 0.2:
                    fac = 0.2
                fac_max = 1.0
                h = h * fac

    y_last = np.array(work_arr[0], copy=True)
    return out_arr[:rec_idx], int(n_steps), int(n_rejected), int(status), float(t), y_last

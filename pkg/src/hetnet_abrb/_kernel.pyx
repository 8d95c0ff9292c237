# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled super-frame scheduling loop. Mirrors ``_kernel_py.superframe``."""
from libc.math cimport log2, pow


cdef inline double _mu(double w, double R, int ucode, double alpha, double eps) nogil:
    if R < eps:
        R = eps
    if ucode == 0:
        return w * (1.0 / R)
    if ucode == 1:
        return w * pow(R, -alpha)
    return w


def superframe(const int[::1] bs_list, const int[::1] bs_ptr, const int[::1] bs_users,
               const int[::1] link_ptr, const int[::1] link_bs, const double[::1] link_snr,
               const int[::1] direct_link, const signed char[::1] cat, const int[::1] serving,
               int n_macro, const unsigned char[:, ::1] allowed, const signed char[::1] mode,
               const signed char[:, :, ::1] patterns, const int[:, ::1] pat_idx,
               const unsigned char[:, :, ::1] in_a, const double[:, :, ::1] fading,
               const double[::1] w, int ucode, double alpha, double eps,
               double[::1] R, double[::1] r_prev, int[:, :, ::1] chosen,
               double[:, :, ::1] mi_out, double[::1] rate_sum,
               double[:, ::1] acc_a_sum, long long[:, ::1] acc_a_cnt,
               double[:, ::1] acc_b_sum, long long[:, ::1] acc_b_cnt):
    cdef Py_ssize_t T = patterns.shape[0]
    cdef Py_ssize_t M = patterns.shape[1]
    cdef Py_ssize_t nb = bs_list.shape[0]
    cdef Py_ssize_t tau, m, i, u, k, l, n, bs, best, d, c
    cdef int md
    cdef double omega, mi, score, best_score, best_mi, sample, x
    cdef bint ok
    cdef double[::1] mu = R.copy()
    cdef double[::1] r_cur = R.copy()
    with nogil:
        for tau in range(T):
            for i in range(nb):
                n = bs_list[i]
                for u in range(bs_ptr[n], bs_ptr[n + 1]):
                    k = bs_users[u]
                    R[k] = (tau + 1.0) / (tau + 2.0) * R[k] + r_prev[k] / (tau + 2.0)
                    mu[k] = _mu(w[k], R[k], ucode, alpha, eps)
                    r_cur[k] = 0.0
            for m in range(M):
                md = mode[m]
                for i in range(nb):
                    n = bs_list[i]
                    best = -1
                    best_score = -1.0
                    best_mi = 0.0
                    ok = True
                    if n < n_macro and patterns[tau, m, n] == 0:
                        ok = False
                    if md == 1 and n >= n_macro:
                        ok = False
                    if ok:
                        for u in range(bs_ptr[n], bs_ptr[n + 1]):
                            k = bs_users[u]
                            if not allowed[k, m]:
                                continue
                            if md == 1 and cat[k] != 1:
                                continue
                            if md == 0 and cat[k] == 1:
                                continue
                            d = direct_link[k]
                            omega = 1.0
                            ok = True
                            for l in range(link_ptr[k], link_ptr[k + 1]):
                                if l == d:
                                    continue
                                bs = link_bs[l]
                                if bs < n_macro:
                                    if patterns[tau, m, bs]:
                                        if md == 0 and cat[k] == 3:
                                            ok = False
                                            break
                                        omega = omega + link_snr[l] * fading[tau, m, l]
                                elif md != 1:
                                    omega = omega + link_snr[l] * fading[tau, m, l]
                            if not ok:
                                continue
                            mi = log2(1.0 + link_snr[d] * fading[tau, m, d] / omega)
                            score = mu[k] * mi
                            if score > best_score:
                                best_score = score
                                best = k
                                best_mi = mi
                    chosen[tau, m, n] = best
                    mi_out[tau, m, n] = best_mi
                    if best >= 0:
                        r_cur[best] = r_cur[best] + best_mi
                    if md == 0:
                        c = 0 if in_a[tau, m, n] else 1
                        for u in range(bs_ptr[n], bs_ptr[n + 1]):
                            k = bs_users[u]
                            if cat[k] == 1:
                                continue
                            sample = best_mi if k == best else 0.0
                            acc_a_sum[k, c] += sample
                            acc_a_cnt[k, c] += 1
                    elif md == 1:
                        c = pat_idx[tau, m]
                        for u in range(bs_ptr[n], bs_ptr[n + 1]):
                            k = bs_users[u]
                            if cat[k] != 1:
                                continue
                            sample = best_mi if k == best else 0.0
                            acc_b_sum[k, c] += sample
                            acc_b_cnt[k, c] += 1
            for i in range(nb):
                n = bs_list[i]
                for u in range(bs_ptr[n], bs_ptr[n + 1]):
                    k = bs_users[u]
                    r_prev[k] = r_cur[k]
                    rate_sum[k] += r_cur[k]

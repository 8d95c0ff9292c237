"""Vectorised numpy super-frame loop; the fallback for ``_kernel.superframe``.

Additions are carried out in the same order as the compiled loop so that the
two backends agree bit for bit up to the accuracy of ``log2``/``pow``.
"""
import numpy as np


def _mu(w, R, ucode, alpha, eps):
    R = np.maximum(R, eps)
    if ucode == 0:
        return w * (1.0 / R)
    if ucode == 1:
        return w * R ** (-alpha)
    return w.copy()


def superframe(bs_list, bs_ptr, bs_users, link_ptr, link_bs, link_snr, direct_link,
               cat, serving, n_macro, allowed, mode, patterns, pat_idx, in_a, fading,
               w, ucode, alpha, eps, R, r_prev, chosen, mi_out, rate_sum,
               acc_a_sum, acc_a_cnt, acc_b_sum, acc_b_cnt):
    T, M = patterns.shape[:2]
    L = len(link_bs)
    segs = [(n, bs_ptr[n], bs_ptr[n + 1]) for n in bs_list]
    U = np.concatenate([bs_users[a:b] for _, a, b in segs] + [np.zeros(0, np.int32)]).astype(np.intp)
    nu = len(U)
    if nu == 0:
        chosen[:, :, bs_list] = -1
        mi_out[:, :, bs_list] = 0.0
        return
    seg_bs = np.concatenate([np.full(b - a, n) for n, a, b in segs]).astype(np.intp)
    starts = np.cumsum([0] + [b - a for _, a, b in segs])[:-1]
    nonempty = np.array([b > a for _, a, b in segs])
    nz_bs = np.array([n for n, a, b in segs if b > a], dtype=np.intp)
    nz_start = starts[nonempty]
    empty_bs = np.array([n for n, a, b in segs if b == a], dtype=np.intp)

    # padded interferer slots per user, in link order
    d = direct_link[U]
    intf = [[l for l in range(link_ptr[k], link_ptr[k + 1]) if l != direct_link[k]] for k in U]
    D = max((len(x) for x in intf), default=0)
    slot = np.full((nu, D), L, dtype=np.intp)  # L is an all-zero padding column
    for i, x in enumerate(intf):
        slot[i, : len(x)] = x
    lb_ext = np.append(link_bs, -1)
    slot_bs = lb_ext[slot]
    slot_macro = (slot_bs >= 0) & (slot_bs < n_macro)
    slot_pico = slot_bs >= n_macro
    snr_ext = np.append(link_snr, 0.0)

    ucat = cat[U]
    serv = serving[U]
    macro_served = serv < n_macro
    is_b = ucat == 1
    is_pi = ucat == 3
    modes = np.asarray(mode)
    mode_a, mode_b = modes == 0, modes == 1
    picos_on = (modes != 1)[:, None]
    allow = allowed[U].T.astype(bool)  # M x nu
    cat_ok = np.where(mode_b[:, None], is_b[None, :],
                      np.where(mode_a[:, None], ~is_b[None, :], True))
    a_rows = np.flatnonzero(mode_a)
    b_rows = np.flatnonzero(mode_b)
    ua_sel = ~is_b
    Ua, Ub = U[ua_sel], U[is_b]
    servA, servB = serv[ua_sel], serv[is_b]
    ar = np.arange(nu)
    big = np.iinfo(np.intp).max
    safe_serv = np.where(macro_served, serv, 0)

    for tau in range(T):
        R[U] = (tau + 1.0) / (tau + 2.0) * R[U] + r_prev[U] / (tau + 2.0)
        mu = _mu(w[U], R[U], ucode, alpha, eps)
        pat = patterns[tau].astype(bool)  # M x N0
        G = snr_ext * np.concatenate([fading[tau], np.zeros((M, 1))], axis=1)
        omega = np.ones((M, nu))
        macro_on_any = np.zeros((M, nu), dtype=bool)
        for j in range(D):
            sb = slot_bs[:, j]
            mac_on = pat[:, np.where(slot_macro[:, j], sb, 0)] & slot_macro[None, :, j]
            on = mac_on | (slot_pico[None, :, j] & picos_on)
            macro_on_any |= mac_on
            omega = omega + np.where(on, G[:, slot[:, j]], 0.0)
        mi = np.log2(1.0 + G[:, d] / omega)
        own_on = np.where(macro_served[None, :], pat[:, safe_serv], picos_on)
        elig = allow & own_on & cat_ok
        elig &= ~(mode_a[:, None] & is_pi[None, :] & macro_on_any)
        score = np.where(elig, mu * mi, -np.inf)
        sched = np.zeros((M, nu))
        for m in range(M):
            if len(nz_start):
                segmax = np.maximum.reduceat(score[m], nz_start)
                rep = np.repeat(segmax, np.diff(np.append(nz_start, nu)))
                pos = np.where(score[m] == rep, ar, big)
                first = np.minimum.reduceat(pos, nz_start)
                valid = segmax > -np.inf
                pick = first[valid]
                chosen[tau, m, nz_bs] = np.where(valid, U[np.minimum(first, nu - 1)], -1)
                mi_out[tau, m, nz_bs] = np.where(valid, mi[m, np.minimum(first, nu - 1)], 0.0)
                sched[m, pick] = mi[m, pick]
            if len(empty_bs):
                chosen[tau, m, empty_bs] = -1
                mi_out[tau, m, empty_bs] = 0.0
        r_cur = np.zeros(nu)
        for m in range(M):
            r_cur = r_cur + sched[m]
        for m in a_rows:
            c = np.where(in_a[tau, m, servA], 0, 1)
            acc_a_sum[Ua, c] += sched[m, ua_sel]
            acc_a_cnt[Ua, c] += 1
        for m in b_rows:
            j = pat_idx[tau, m]
            acc_b_sum[Ub, j] += sched[m, is_b]
            acc_b_cnt[Ub, j] += 1
        r_prev[U] = r_cur
        rate_sum[U] += r_cur

"""Inner loops of DJ-IST and DJ-ADMM.

Each solver has two interchangeable kernels with identical semantics:

* ``*_numba``: explicit loops compiled with numba (the default),
* ``*_numpy``: vectorized over nodes, used when numba is missing or
  ``JOINTSPARSE_DISABLE_NUMBA=1``.

A kernel advances the network by up to ``n_rounds`` synchronous rounds,
mutating the state arrays in place.  During a round every active node reads
the round-start iterates and the stored neighbor support bits; support-index
messages are delivered (the receiver toggles its stored bit) at the end of
the round.  Messages are written as ``(round, sender, index)`` triples into
preallocated buffers starting at ``n_msg``.  When ``hist`` has a non-zero
first dimension, the (sparse) iterate after each round is copied into it.
``viol[0]`` accumulates how many weight evaluations hit the ``[.]_+`` clamp,
i.e. broke ``alpha*|x| + mean < beta``.

``stop_flags`` bit 0 selects the l2 step norm instead of the max norm; bit 1
selects network scope: instead of freezing each node as soon as its own step
is below ``eps``, every node keeps iterating until a round in which all of
them are below ``eps`` at once.

Both return ``(t, n_msg)``: the next round index and the message count.
"""
import numpy as np

from ._accel import HAS_NUMBA, USE_NUMBA, njit

STOP_L2, STOP_NETWORK = 1, 2

__all__ = [
    "STOP_L2",
    "STOP_NETWORK",
    "djist_advance",
    "djadmm_advance",
    "djist_advance_numba",
    "djist_advance_numpy",
    "djadmm_advance_numba",
    "djadmm_advance_numpy",
    "message_capacity",
]


def message_capacity(V, n, p):
    """Upper bound on support-index messages in a run.

    A component starts active and may be re-activated at most ``p`` times, so
    its indicator flips at most ``2p + 1`` times.
    """
    return (2 * p + 1) * V * n


# ---------------------------------------------------------------- DJ-IST


@njit
def _djist_loop(A, AT, y, x, pub, c, stopped, indptr, indices, deg,
                lam, alpha, beta, tau, eps, p, stop_flags, t0, n_rounds,
                msg_round, msg_sender, msg_index, n_msg, hist, viol):
    V, m, n = A.shape
    xn = np.empty(n)
    r = np.empty(m)
    flips = np.empty(n, dtype=np.int64)
    pending = np.empty((V, n), dtype=np.int64)
    n_pending = np.zeros(V, dtype=np.int64)
    l2 = (stop_flags & STOP_L2) != 0
    network = (stop_flags & STOP_NETWORK) != 0
    t = t0
    for step in range(n_rounds):
        active = False
        all_met = True
        for v in range(V):
            n_pending[v] = 0
            if stopped[v]:
                continue
            active = True
            for j in range(m):
                r[j] = y[v, j]
            for i in range(n):
                xi = x[v, i]
                if xi != 0.0:
                    for j in range(m):
                        r[j] -= AT[v, i, j] * xi
            dmax = 0.0
            dsq = 0.0
            nf = 0
            for i in range(n):
                g = 0.0
                for j in range(m):
                    g += AT[v, i, j] * r[j]
                xi = x[v, i]
                zi = xi + tau * g
                cnt = 1.0 if xi != 0.0 else 0.0
                for q in range(indptr[v], indptr[v + 1]):
                    cnt += pub[indices[q], i]
                w = beta - alpha * abs(xi) - cnt / deg[v]
                if w <= 0.0:
                    w = 0.0
                    viol[0] += 1
                th = lam * alpha * w
                if zi > th:
                    nv = zi - th
                elif zi < -th:
                    nv = zi + th
                else:
                    nv = 0.0
                if xi == 0.0:
                    if c[v, i] >= p:
                        nv = 0.0
                    if nv != 0.0:
                        c[v, i] += 1
                if (nv != 0.0) != (xi != 0.0):
                    flips[nf] = i
                    nf += 1
                d = abs(nv - xi)
                if d > dmax:
                    dmax = d
                dsq += d * d
                xn[i] = nv
            for i in range(n):
                x[v, i] = xn[i]
            for f in range(nf):
                msg_round[n_msg] = t
                msg_sender[n_msg] = v
                msg_index[n_msg] = flips[f]
                n_msg += 1
                pending[v, f] = flips[f]
            n_pending[v] = nf
            crit = np.sqrt(dsq) if l2 else dmax
            if crit >= eps:
                all_met = False
            elif not network:
                stopped[v] = True
        if not active:
            break
        if network and all_met:
            for v in range(V):
                stopped[v] = True
        # end-of-round delivery
        for v in range(V):
            for f in range(n_pending[v]):
                i = pending[v, f]
                pub[v, i] = 1.0 - pub[v, i]
        if step < hist.shape[0]:
            for v in range(V):
                for i in range(n):
                    hist[step, v, i] = x[v, i]
        t += 1
    return t, n_msg


def djist_advance_numba(A, AT, y, x, pub, c, stopped, indptr, indices, deg,
                        lam, alpha, beta, tau, eps, p, stop_flags, t0, n_rounds,
                        msg_round, msg_sender, msg_index, n_msg, hist, viol):
    if not HAS_NUMBA:
        raise RuntimeError("numba is not installed")
    return _djist_loop(A, AT, y, x, pub, c, stopped, indptr, indices, deg,
                       float(lam), float(alpha), float(beta), float(tau), float(eps),
                       int(p), int(stop_flags), int(t0), int(n_rounds),
                       msg_round, msg_sender, msg_index, int(n_msg), hist, viol)


def _adjacency(indptr, indices, V):
    M = np.zeros((V, V))
    for v in range(V):
        M[v, indices[indptr[v]:indptr[v + 1]]] = 1.0
    return M


def _emit(changed, t, msg_round, msg_sender, msg_index, n_msg):
    senders, idx = np.nonzero(changed)
    k = len(senders)
    msg_round[n_msg:n_msg + k] = t
    msg_sender[n_msg:n_msg + k] = senders
    msg_index[n_msg:n_msg + k] = idx
    return n_msg + k


def _step_size(delta, stop_flags):
    if stop_flags & STOP_L2:
        return np.sqrt(np.sum(delta * delta, axis=1))
    return np.abs(delta).max(axis=1)


def _update_stopped(stopped, active, met, stop_flags):
    if stop_flags & STOP_NETWORK:
        if met[active].all():
            stopped[:] = True
    else:
        stopped |= active & met


def djist_advance_numpy(A, AT, y, x, pub, c, stopped, indptr, indices, deg,
                        lam, alpha, beta, tau, eps, p, stop_flags, t0, n_rounds,
                        msg_round, msg_sender, msg_index, n_msg, hist, viol):
    V = A.shape[0]
    adj = _adjacency(indptr, indices, V)
    t = t0
    for step in range(n_rounds):
        active = ~stopped
        if not active.any():
            break
        resid = y - np.einsum("vmn,vn->vm", A, x)
        z = x + tau * np.einsum("vnm,vm->vn", AT, resid)
        nz = x != 0.0
        mean = (nz + adj @ pub) / deg[:, None]
        w = np.maximum(0.0, beta - alpha * np.abs(x) - mean)
        viol[0] += int(np.count_nonzero((w <= 0.0) & active[:, None]))
        th = lam * alpha * w
        xn = np.where(np.abs(z) <= th, 0.0, z - np.sign(z) * th)
        xn[~nz & (c >= p)] = 0.0
        xn[~active] = x[~active]
        c += (~nz & (xn != 0.0)).astype(c.dtype)
        changed = (xn != 0.0) != nz
        n_msg = _emit(changed, t, msg_round, msg_sender, msg_index, n_msg)
        crit = _step_size(xn - x, stop_flags)
        x[...] = xn
        _update_stopped(stopped, active, crit < eps, stop_flags)
        pub[changed] = 1.0 - pub[changed]
        if step < hist.shape[0]:
            hist[step] = x
        t += 1
    return t, n_msg


# ---------------------------------------------------------------- DJ-ADMM


@njit
def _djadmm_loop(A, AT, Aty, K, x, z, mu, pub, c, stopped, indptr, indices, deg,
                 lam, alpha, beta, rho, eps, p, stop_flags, t0, n_rounds,
                 msg_round, msg_sender, msg_index, n_msg, hist, viol):
    V, m, n = A.shape
    q = np.empty(n)
    s = np.empty(m)
    u = np.empty(m)
    zn = np.empty(n)
    flips = np.empty(n, dtype=np.int64)
    pending = np.empty((V, n), dtype=np.int64)
    n_pending = np.zeros(V, dtype=np.int64)
    l2 = (stop_flags & STOP_L2) != 0
    network = (stop_flags & STOP_NETWORK) != 0
    t = t0
    for step in range(n_rounds):
        active = False
        all_met = True
        for v in range(V):
            n_pending[v] = 0
            if stopped[v]:
                continue
            active = True
            # x-update through the cached (rho I + A A^T)^-1
            for i in range(n):
                q[i] = Aty[v, i] + rho * (z[v, i] - mu[v, i])
            for j in range(m):
                acc = 0.0
                for i in range(n):
                    acc += A[v, j, i] * q[i]
                s[j] = acc
            for j in range(m):
                acc = 0.0
                for l in range(m):
                    acc += K[v, j, l] * s[l]
                u[j] = acc
            for i in range(n):
                acc = 0.0
                for j in range(m):
                    acc += AT[v, i, j] * u[j]
                x[v, i] = (q[i] - acc) / rho
            dz_max = 0.0
            dz_sq = 0.0
            pr_max = 0.0
            pr_sq = 0.0
            nf = 0
            for i in range(n):
                zi = z[v, i]
                cnt = 1.0 if zi != 0.0 else 0.0
                for k in range(indptr[v], indptr[v + 1]):
                    cnt += pub[indices[k], i]
                w = beta - alpha * abs(zi) - cnt / deg[v]
                if w <= 0.0:
                    w = 0.0
                    viol[0] += 1
                th = lam * alpha * w / rho
                a = x[v, i] + mu[v, i]
                if a > th:
                    nv = a - th
                elif a < -th:
                    nv = a + th
                else:
                    nv = 0.0
                if zi == 0.0:
                    if c[v, i] >= p:
                        nv = 0.0
                    if nv != 0.0:
                        c[v, i] += 1
                if (nv != 0.0) != (zi != 0.0):
                    flips[nf] = i
                    nf += 1
                d = abs(nv - zi)
                if d > dz_max:
                    dz_max = d
                dz_sq += d * d
                pr = abs(x[v, i] - nv)
                if pr > pr_max:
                    pr_max = pr
                pr_sq += pr * pr
                zn[i] = nv
            for i in range(n):
                mu[v, i] += x[v, i] - zn[i]
                z[v, i] = zn[i]
            for f in range(nf):
                msg_round[n_msg] = t
                msg_sender[n_msg] = v
                msg_index[n_msg] = flips[f]
                n_msg += 1
                pending[v, f] = flips[f]
            n_pending[v] = nf
            if l2:
                crit = max(np.sqrt(dz_sq), np.sqrt(pr_sq))
            else:
                crit = max(dz_max, pr_max)
            if crit >= eps:
                all_met = False
            elif not network:
                stopped[v] = True
        if not active:
            break
        if network and all_met:
            for v in range(V):
                stopped[v] = True
        for v in range(V):
            for f in range(n_pending[v]):
                i = pending[v, f]
                pub[v, i] = 1.0 - pub[v, i]
        if step < hist.shape[0]:
            for v in range(V):
                for i in range(n):
                    hist[step, v, i] = z[v, i]
        t += 1
    return t, n_msg


def djadmm_advance_numba(A, AT, Aty, K, x, z, mu, pub, c, stopped, indptr, indices, deg,
                         lam, alpha, beta, rho, eps, p, stop_flags, t0, n_rounds,
                         msg_round, msg_sender, msg_index, n_msg, hist, viol):
    if not HAS_NUMBA:
        raise RuntimeError("numba is not installed")
    return _djadmm_loop(A, AT, Aty, K, x, z, mu, pub, c, stopped, indptr, indices, deg,
                        float(lam), float(alpha), float(beta), float(rho), float(eps),
                        int(p), int(stop_flags), int(t0), int(n_rounds),
                        msg_round, msg_sender, msg_index, int(n_msg), hist, viol)


def djadmm_advance_numpy(A, AT, Aty, K, x, z, mu, pub, c, stopped, indptr, indices, deg,
                         lam, alpha, beta, rho, eps, p, stop_flags, t0, n_rounds,
                         msg_round, msg_sender, msg_index, n_msg, hist, viol):
    V = A.shape[0]
    adj = _adjacency(indptr, indices, V)
    t = t0
    for step in range(n_rounds):
        active = ~stopped
        if not active.any():
            break
        q = Aty + rho * (z - mu)
        s = np.einsum("vmn,vn->vm", A, q)
        u = np.einsum("vjl,vl->vj", K, s)
        xn = (q - np.einsum("vnm,vm->vn", AT, u)) / rho
        nz = z != 0.0
        mean = (nz + adj @ pub) / deg[:, None]
        w = np.maximum(0.0, beta - alpha * np.abs(z) - mean)
        viol[0] += int(np.count_nonzero((w <= 0.0) & active[:, None]))
        th = lam * alpha * w / rho
        a = xn + mu
        zn = np.where(np.abs(a) <= th, 0.0, a - np.sign(a) * th)
        zn[~nz & (c >= p)] = 0.0
        keep = ~active
        xn[keep] = x[keep]
        zn[keep] = z[keep]
        c += (~nz & (zn != 0.0)).astype(c.dtype)
        changed = (zn != 0.0) != nz
        n_msg = _emit(changed, t, msg_round, msg_sender, msg_index, n_msg)
        crit = np.maximum(_step_size(zn - z, stop_flags), _step_size(xn - zn, stop_flags))
        mu[active] += (xn - zn)[active]
        x[...] = xn
        z[...] = zn
        _update_stopped(stopped, active, crit < eps, stop_flags)
        pub[changed] = 1.0 - pub[changed]
        if step < hist.shape[0]:
            hist[step] = z
        t += 1
    return t, n_msg


if USE_NUMBA:
    djist_advance = djist_advance_numba
    djadmm_advance = djadmm_advance_numba
else:
    djist_advance = djist_advance_numpy
    djadmm_advance = djadmm_advance_numpy

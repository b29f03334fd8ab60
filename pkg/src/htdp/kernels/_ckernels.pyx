# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. See htdp.kernels for the calling conventions."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, exp, fabs, fmax

cnp.import_array()

DEF LINEAR = 0
DEF QUADRATIC = 1
DEF LOGISTIC = 2
DEF PSEUDO_HUBER = 3
DEF BALL = 0
DEF BOX = 1


cdef struct Family:
    int code
    double p0
    int has_mask
    int dummy
    double dummy_mu


cdef struct Dom:
    int K
    int* kinds
    double* A
    double* B
    double* radii
    double* work
    double* incr
    double* prev


cdef inline double _dot(const double* a, const double* b, int d) nogil:
    cdef double s = 0.0
    cdef int i
    for i in range(d):
        s += a[i] * b[i]
    return s


cdef inline double _norm(const double* a, int d) nogil:
    return sqrt(_dot(a, a, d))


cdef void _grad(Family* f, const double* s, const double* x, const double* center,
                double* g, int d) nogil:
    """Gradient at x of the loss with payload row s (flag in column d if masked)."""
    cdef int i
    cdef double z, a
    if f.has_mask and s[d] > 0.5:
        if f.dummy == 0:
            for i in range(d):
                g[i] = 0.0
        else:
            for i in range(d):
                g[i] = f.dummy_mu * (x[i] - center[i])
        return
    if f.code == LINEAR:
        for i in range(d):
            g[i] = s[i] + f.p0 * x[i]
    elif f.code == QUADRATIC:
        for i in range(d):
            g[i] = x[i] - s[i]
    elif f.code == LOGISTIC:
        z = _dot(s, x, d)
        # -expit(-z), written to avoid overflow
        if z >= 0:
            a = -exp(-z) / (1.0 + exp(-z))
        else:
            a = -1.0 / (1.0 + exp(z))
        for i in range(d):
            g[i] = a * s[i]
    else:
        z = _dot(s, x, d)
        a = z / sqrt(1.0 + (z / f.p0) * (z / f.p0))
        for i in range(d):
            g[i] = a * s[i]


cdef inline int _in_ball(const double* x, const double* c, double r, int d) nogil:
    cdef double s = 0.0, t
    cdef int i
    for i in range(d):
        t = x[i] - c[i]
        s += t * t
    return sqrt(s) <= r


cdef void _proj_ball(double* x, const double* c, double r, int d) nogil:
    cdef double s = 0.0, t, scale
    cdef int i
    for i in range(d):
        t = x[i] - c[i]
        s += t * t
    s = sqrt(s)
    if s > r:
        scale = r / s
        for i in range(d):
            x[i] = c[i] + (x[i] - c[i]) * scale


cdef void _proj_box(double* x, const double* lo, const double* hi, int d) nogil:
    cdef int i
    for i in range(d):
        if x[i] < lo[i]:
            x[i] = lo[i]
        elif x[i] > hi[i]:
            x[i] = hi[i]


cdef void _proj_one(Dom* D, int k, double* x, int d) nogil:
    if D.kinds[k] == BALL:
        _proj_ball(x, D.A + k * d, D.radii[k], d)
    else:
        _proj_box(x, D.A + k * d, D.B + k * d, d)


cdef void _proj_two_balls(Dom* D, double* x, int d) nogil:
    cdef double* a = D.A
    cdef double* b = D.A + d
    cdef double ra = D.radii[0], rb = D.radii[1]
    cdef double* p = D.work
    cdef double* q = D.work + d
    cdef int i, j, jmin
    cdef double sep, h, rim, t, wn, emin
    cdef int in_a = _in_ball(x, a, ra, d)
    cdef int in_b = _in_ball(x, b, rb, d)
    if in_a and in_b:
        return
    for i in range(d):
        p[i] = x[i]
        q[i] = x[i]
    _proj_ball(p, a, ra, d)
    if _in_ball(p, b, rb, d):
        for i in range(d):
            x[i] = p[i]
        return
    _proj_ball(q, b, rb, d)
    if _in_ball(q, a, ra, d):
        for i in range(d):
            x[i] = q[i]
        return
    # both constraints active: closest point on the rim sphere
    sep = 0.0
    for i in range(d):
        sep += (b[i] - a[i]) * (b[i] - a[i])
    sep = sqrt(sep)
    if sep == 0.0:
        if ra <= rb:
            for i in range(d):
                x[i] = p[i]
        else:
            for i in range(d):
                x[i] = q[i]
        return
    h = (ra * ra - rb * rb + sep * sep) / (2.0 * sep)
    rim = sqrt(fmax(ra * ra - h * h, 0.0))
    # p <- unit axis e, q <- x - c projected orthogonally to e
    for i in range(d):
        p[i] = (b[i] - a[i]) / sep
    t = 0.0
    for i in range(d):
        t += (x[i] - a[i] - h * p[i]) * p[i]
    for i in range(d):
        q[i] = (x[i] - a[i] - h * p[i]) - t * p[i]
    wn = _norm(q, d)
    if wn == 0.0:
        jmin = 0
        emin = fabs(p[0])
        for j in range(1, d):
            if fabs(p[j]) < emin:
                emin = fabs(p[j])
                jmin = j
        for i in range(d):
            q[i] = -p[jmin] * p[i]
        q[jmin] += 1.0
        wn = _norm(q, d)
    for i in range(d):
        x[i] = a[i] + h * p[i] + rim * q[i] / wn


cdef void _project(Dom* D, double* x, int d) nogil:
    cdef int k, it, i
    cdef double change, v
    if D.K == 1:
        _proj_one(D, 0, x, d)
        return
    if D.K == 2 and D.kinds[0] == BALL and D.kinds[1] == BALL:
        _proj_two_balls(D, x, d)
        return
    # Dykstra
    for i in range(D.K * d):
        D.incr[i] = 0.0
    for it in range(10000):
        for i in range(d):
            D.prev[i] = x[i]
        for k in range(D.K):
            for i in range(d):
                D.work[i] = x[i] + D.incr[k * d + i]
            _proj_one(D, k, D.work, d)
            for i in range(d):
                D.incr[k * d + i] = x[i] + D.incr[k * d + i] - D.work[i]
                x[i] = D.work[i]
        change = 0.0
        for i in range(d):
            v = fabs(x[i] - D.prev[i])
            if v > change:
                change = v
        if change <= 1e-14:
            break


cdef class _DomainBuffers:
    cdef int[::1] kinds
    cdef double[:, ::1] A
    cdef double[:, ::1] B
    cdef double[::1] radii
    cdef double[::1] work
    cdef double[:, ::1] incr
    cdef double[::1] prev
    cdef Dom dom

    def __init__(self, kinds, A, B, radii):
        d = A.shape[1]
        self.kinds = np.ascontiguousarray(kinds, dtype=np.intc)
        self.A = np.ascontiguousarray(A, dtype=np.float64)
        self.B = np.ascontiguousarray(B, dtype=np.float64)
        self.radii = np.ascontiguousarray(radii, dtype=np.float64)
        self.work = np.zeros(2 * d)
        self.incr = np.zeros((self.kinds.shape[0], d))
        self.prev = np.zeros(d)
        self.dom.K = self.kinds.shape[0]
        self.dom.kinds = &self.kinds[0]
        self.dom.A = &self.A[0, 0]
        self.dom.B = &self.B[0, 0]
        self.dom.radii = &self.radii[0]
        self.dom.work = &self.work[0]
        self.dom.incr = &self.incr[0, 0]
        self.dom.prev = &self.prev[0]


cdef Family _family(int code, double p0, int has_mask, int dummy, double dummy_mu):
    cdef Family f
    f.code = code
    f.p0 = p0
    f.has_mask = has_mask
    f.dummy = dummy
    f.dummy_mu = dummy_mu
    return f


def project(kinds, A, B, radii, x):
    cdef _DomainBuffers buf = _DomainBuffers(kinds, A, B, radii)
    cdef double[::1] out = np.array(x, dtype=np.float64)
    _project(&buf.dom, &out[0], out.shape[0])
    return np.asarray(out)


def onepass(int code, double p0, int has_mask, int dummy, double dummy_mu,
            const double[::1] dummy_center, const double[:, ::1] S, const double[::1] x0, double C,
            const double[::1] chat, double eta, kinds, A, B, radii, bint want_trace):
    cdef int T = S.shape[0], d = x0.shape[0]
    cdef int t, i, clips = 0
    cdef double nrm, scale
    cdef bint two = chat.shape[0] > 0
    cdef Family f = _family(code, p0, has_mask, dummy, dummy_mu)
    cdef _DomainBuffers buf = _DomainBuffers(kinds, A, B, radii)
    cdef double[::1] x = np.array(x0, dtype=np.float64)
    cdef double[::1] g = np.zeros(d)
    cdef double[::1] acc = np.zeros(d)
    cdef cnp.uint8_t[::1] flags = np.zeros(T, dtype=np.uint8)
    trace_arr = np.zeros((T if want_trace else 0, d))
    cdef double[:, ::1] trace = trace_arr
    for t in range(T):
        for i in range(d):
            acc[i] += x[i]
        if want_trace:
            for i in range(d):
                trace[t, i] = x[i]
        _grad(&f, &S[t, 0], &x[0], &dummy_center[0], &g[0], d)
        nrm = _norm(&g[0], d)
        if two:
            if nrm >= chat[t]:
                flags[t] = 1
                clips += 1
                if nrm > C:
                    scale = C / nrm
                    for i in range(d):
                        g[i] *= scale
        elif nrm > C:
            flags[t] = 1
            clips += 1
            scale = C / nrm
            for i in range(d):
                g[i] *= scale
        for i in range(d):
            x[i] -= eta * g[i]
        _project(&buf.dom, &x[0], d)
    for i in range(d):
        acc[i] /= T
    return (np.asarray(acc), np.asarray(x), clips,
            trace_arr if want_trace else None, np.asarray(flags))


def smooth_phase(int code, double p0, int has_mask, int dummy, double dummy_mu,
                 const double[::1] dummy_center, const double[:, ::1] S, const double[::1] x0,
                 double eta, double C, const double[::1] chat_draws, const double[::1] nu,
                 double c_hat, kinds, A, B, radii, bint want_trace):
    cdef int n = S.shape[0], d = x0.shape[0]
    cdef int j, i, count = 0, halt = -1
    cdef double nrm, scale
    cdef Family f = _family(code, p0, has_mask, dummy, dummy_mu)
    cdef _DomainBuffers buf = _DomainBuffers(kinds, A, B, radii)
    cdef double[::1] x = np.array(x0, dtype=np.float64)
    cdef double[::1] g = np.zeros(d)
    cdef double[::1] acc = np.zeros(d)
    cdef cnp.uint8_t[::1] flags = np.zeros(n, dtype=np.uint8)
    trace_arr = np.zeros((n if want_trace else 0, d))
    cdef double[:, ::1] trace = trace_arr
    for j in range(n):
        for i in range(d):
            acc[i] += x[i]
        if want_trace:
            for i in range(d):
                trace[j, i] = x[i]
        _grad(&f, &S[j, 0], &x[0], &dummy_center[0], &g[0], d)
        nrm = _norm(&g[0], d)
        if nrm + nu[j] >= chat_draws[count]:
            flags[j] = 1
            count += 1
            if nrm > C:
                scale = C / nrm
                for i in range(d):
                    g[i] *= scale
            if count >= c_hat:
                halt = j
                break
        for i in range(d):
            x[i] -= eta * g[i]
        _project(&buf.dom, &x[0], d)
    for i in range(d):
        acc[i] /= n
    return (np.asarray(acc), np.asarray(x), count, halt,
            trace_arr if want_trace else None, np.asarray(flags))


def cdpsgd_chunk(int code, double p0, int has_mask, int dummy, double dummy_mu,
                 const double[::1] dummy_center, const double[:, :, ::1] S, const double[::1] shift,
                 double[:, ::1] x, double[:, ::1] acc, double C, double lam,
                 long t0, int steps, const double[:, :, ::1] noise, const double[:, ::1] gconst,
                 long gconst_clips, kinds, A, B, radii, double[:, :, ::1] trace):
    """Advance J independent blocks by ``steps`` iterations in place."""
    cdef int J = x.shape[0], d = x.shape[1], m = S.shape[1]
    cdef int s, j, r, i
    cdef long t, clips = 0
    cdef double eta, w, nrm, scale
    cdef bint const_g = gconst.shape[0] > 0
    cdef bint has_noise = noise.shape[0] > 0
    cdef bint want_trace = trace.shape[0] > 0
    cdef Family f = _family(code, p0, has_mask, dummy, dummy_mu)
    cdef _DomainBuffers buf = _DomainBuffers(kinds, A, B, radii)
    cdef double[::1] g = np.zeros(d)
    cdef double[::1] gs = np.zeros(d)
    cdef double[::1] xs = np.zeros(d)
    for s in range(steps):
        t = t0 + s
        eta = 4.0 / (lam * (t + 1))
        w = t + 4.0
        for j in range(J):
            for i in range(d):
                acc[j, i] += w * x[j, i]
            if want_trace:
                for i in range(d):
                    trace[s, j, i] = x[j, i]
            if const_g:
                for i in range(d):
                    g[i] = gconst[j, i]
            else:
                for i in range(d):
                    g[i] = 0.0
                    xs[i] = x[j, i] + shift[i]
                for r in range(m):
                    _grad(&f, &S[j, r, 0], &xs[0], &dummy_center[0], &gs[0], d)
                    nrm = _norm(&gs[0], d)
                    if nrm > C:
                        clips += 1
                        scale = C / nrm
                    else:
                        scale = 1.0
                    for i in range(d):
                        g[i] += gs[i] * scale
                for i in range(d):
                    g[i] /= m
            for i in range(d):
                if has_noise:
                    x[j, i] = (x[j, i] - eta * (g[i] + noise[s, j, i])) / (1.0 + eta * lam)
                else:
                    x[j, i] = (x[j, i] - eta * g[i]) / (1.0 + eta * lam)
            _project(&buf.dom, &x[j, 0], d)
        if const_g:
            clips += gconst_clips
    return clips

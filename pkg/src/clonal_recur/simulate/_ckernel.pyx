# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled event loop.  Mirrors ``_pykernel.run_kernel`` draw for draw."""

from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport log, exp, INFINITY, NAN, isnan
from libc.stdlib cimport malloc, realloc, free
from libc.string cimport memset
from numpy.random cimport bitgen_t

import numpy as np

cdef enum:
    RECURRED = 0
    REACHED_STOP = 1
    EXTINCT = 2
    EVENT_CAP = 3
    NO_MEMORY = 4


cdef struct Clones:
    double* births
    long long* sizes
    long long* tree      # Fenwick tree over sizes, 1-based, length cap + 1
    Py_ssize_t count
    Py_ssize_t cap
    Py_ssize_t top       # highest power of two <= cap


cdef int clones_init(Clones* c, Py_ssize_t cap) nogil:
    c.count = 0
    c.cap = cap
    c.births = <double*> malloc(cap * sizeof(double))
    c.sizes = <long long*> malloc(cap * sizeof(long long))
    c.tree = <long long*> malloc((cap + 1) * sizeof(long long))
    if c.births == NULL or c.sizes == NULL or c.tree == NULL:
        return -1
    memset(c.tree, 0, (cap + 1) * sizeof(long long))
    c.top = 1
    while c.top * 2 <= cap:
        c.top *= 2
    return 0


cdef void clones_free(Clones* c) nogil:
    free(c.births)
    free(c.sizes)
    free(c.tree)


cdef inline void tree_add(Clones* c, Py_ssize_t i, long long v) nogil:
    cdef Py_ssize_t j = i + 1
    while j <= c.cap:
        c.tree[j] += v
        j += j & (-j)


cdef int clones_grow(Clones* c) nogil:
    cdef Py_ssize_t new_cap = c.cap * 2
    cdef Py_ssize_t i
    cdef double* b = <double*> realloc(c.births, new_cap * sizeof(double))
    if b == NULL:
        return -1
    c.births = b
    cdef long long* s = <long long*> realloc(c.sizes, new_cap * sizeof(long long))
    if s == NULL:
        return -1
    c.sizes = s
    free(c.tree)
    c.tree = <long long*> malloc((new_cap + 1) * sizeof(long long))
    if c.tree == NULL:
        return -1
    memset(c.tree, 0, (new_cap + 1) * sizeof(long long))
    c.cap = new_cap
    c.top *= 2
    for i in range(c.count):
        tree_add(c, i, c.sizes[i])
    return 0


cdef inline int clones_add(Clones* c, double t) nogil:
    if c.count == c.cap:
        if clones_grow(c) != 0:
            return -1
    c.births[c.count] = t
    c.sizes[c.count] = 1
    tree_add(c, c.count, 1)
    c.count += 1
    return 0


cdef inline Py_ssize_t clones_find(Clones* c, long long k) nogil:
    # smallest 0-based index whose cumulative size exceeds k
    cdef Py_ssize_t pos = 0
    cdef Py_ssize_t step = c.top
    cdef long long rem = k
    while step > 0:
        if pos + step <= c.cap and c.tree[pos + step] <= rem:
            pos += step
            rem -= c.tree[pos]
        step >>= 1
    return pos


cdef inline double next_u(bitgen_t* rng) nogil:
    return rng.next_double(rng.state)


def run_kernel(bit_generator, bint stochastic, double r0, double d0, double mrate,
               double r1, double d1, double lambda0, double n, double threshold,
               double t_stop, bint stop_on_recurrence, Py_ssize_t initial_clones,
               long long max_events):
    """Simulate one trajectory; see ``simulate.kernel`` for the contract."""
    capsule = bit_generator.capsule
    cdef bitgen_t* rng = <bitgen_t*> PyCapsule_GetPointer(capsule, "BitGenerator")
    cdef Clones c
    cdef Py_ssize_t i, cap0 = 64
    while cap0 < initial_clones:
        cap0 *= 2
    if clones_init(&c, cap0) != 0:
        clones_free(&c)
        raise MemoryError()

    cdef double t = 0.0, gamma = NAN, tn, tm, w, a0, a1, total, target, cap, z0_final
    cdef double rsum = r1 + d1
    cdef long long z0 = <long long> n
    cdef long long z1 = 0, k
    cdef long long sb = 0, sd = 0, nm = 0, rb = 0, rd = 0, events = 0
    cdef int status = REACHED_STOP

    for i in range(initial_clones):
        clones_add(&c, 0.0)
        z1 += 1

    with bit_generator.lock:
        with nogil:
            if stochastic:
                while True:
                    a0 = (r0 + d0 + mrate) * <double> z0
                    a1 = rsum * <double> z1
                    total = a0 + a1
                    if total == 0.0:
                        status = EXTINCT
                        break
                    tn = t - log(1.0 - next_u(rng)) / total
                    if tn >= t_stop:
                        t = t_stop
                        status = REACHED_STOP
                        break
                    events += 1
                    if events > max_events:
                        status = EVENT_CAP
                        break
                    t = tn
                    w = next_u(rng) * total
                    if w < a0:
                        if w < r0 * <double> z0:
                            z0 += 1
                            sb += 1
                        elif w < (r0 + d0) * <double> z0:
                            z0 -= 1
                            sd += 1
                        else:
                            if clones_add(&c, t) != 0:
                                status = NO_MEMORY
                                break
                            z1 += 1
                            nm += 1
                            if z1 > threshold and isnan(gamma):
                                gamma = t
                                if stop_on_recurrence:
                                    status = RECURRED
                                    break
                    else:
                        w -= a0
                        if w < r1 * <double> z1:
                            k = <long long> (w / r1)
                            if k >= z1:
                                k = z1 - 1
                            i = clones_find(&c, k)
                            c.sizes[i] += 1
                            tree_add(&c, i, 1)
                            z1 += 1
                            rb += 1
                            if z1 > threshold and isnan(gamma):
                                gamma = t
                                if stop_on_recurrence:
                                    status = RECURRED
                                    break
                        else:
                            k = <long long> ((w - r1 * <double> z1) / d1)
                            if k >= z1:
                                k = z1 - 1
                            i = clones_find(&c, k)
                            c.sizes[i] -= 1
                            tree_add(&c, i, -1)
                            z1 -= 1
                            rd += 1
                z0_final = <double> z0
            else:
                cap = mrate * n / (-lambda0)
                target = -log(1.0 - next_u(rng))
                if target < cap:
                    tm = log(1.0 - target / cap) / lambda0
                else:
                    tm = INFINITY
                while True:
                    if z1 > 0:
                        tn = t - log(1.0 - next_u(rng)) / (rsum * <double> z1)
                    else:
                        tn = INFINITY
                    if tm <= tn:
                        if tm == INFINITY:
                            status = EXTINCT
                            break
                        if tm >= t_stop:
                            t = t_stop
                            status = REACHED_STOP
                            break
                        events += 1
                        if events > max_events:
                            status = EVENT_CAP
                            break
                        t = tm
                        if clones_add(&c, t) != 0:
                            status = NO_MEMORY
                            break
                        z1 += 1
                        nm += 1
                        target += -log(1.0 - next_u(rng))
                        if target < cap:
                            tm = log(1.0 - target / cap) / lambda0
                        else:
                            tm = INFINITY
                        if z1 > threshold and isnan(gamma):
                            gamma = t
                            if stop_on_recurrence:
                                status = RECURRED
                                break
                    else:
                        if tn >= t_stop:
                            t = t_stop
                            status = REACHED_STOP
                            break
                        events += 1
                        if events > max_events:
                            status = EVENT_CAP
                            break
                        t = tn
                        w = next_u(rng) * (rsum * <double> z1)
                        if w < r1 * <double> z1:
                            k = <long long> (w / r1)
                            if k >= z1:
                                k = z1 - 1
                            i = clones_find(&c, k)
                            c.sizes[i] += 1
                            tree_add(&c, i, 1)
                            z1 += 1
                            rb += 1
                            if z1 > threshold and isnan(gamma):
                                gamma = t
                                if stop_on_recurrence:
                                    status = RECURRED
                                    break
                        else:
                            k = <long long> ((w - r1 * <double> z1) / d1)
                            if k >= z1:
                                k = z1 - 1
                            i = clones_find(&c, k)
                            c.sizes[i] -= 1
                            tree_add(&c, i, -1)
                            z1 -= 1
                            rd += 1
                z0_final = n * exp(lambda0 * t)

    if status == NO_MEMORY:
        clones_free(&c)
        raise MemoryError("clone table allocation failed")
    births = np.empty(c.count, dtype=np.float64)
    sizes = np.empty(c.count, dtype=np.int64)
    cdef double[::1] bv = births
    cdef long long[::1] sv = sizes
    for i in range(c.count):
        bv[i] = c.births[i]
        sv[i] = c.sizes[i]
    clones_free(&c)
    counters = np.array([sb, sd, nm, rb, rd], dtype=np.int64)
    return gamma, t, z0_final, births, sizes, counters, status

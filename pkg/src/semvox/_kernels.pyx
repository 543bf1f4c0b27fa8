# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: ray casting, free-space tracing, voxel binning.

These mirror ``semvox._kernels_py`` operation-for-operation (same formulas,
same evaluation order, compiled with -ffp-contract=off) so both backends
produce bit-identical results. See the numpy module for the contracts.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, fabs, floor, fmax, fmin, sqrt

cnp.import_array()

DEF FREE_RAW = 255
DEF DROP = 255


def raycast_boxes(const double[:, ::1] origins, const double[:, ::1] dirs, double max_range,
                  const double[:, :, ::1] rot, const double[:, ::1] trans,
                  const double[:, ::1] lo, const double[:, ::1] hi,
                  const cnp.int32_t[::1] labels, const cnp.int32_t[::1] actors,
                  int has_ground, double ground_z, double road_center_y,
                  double road_half_width, int road_label, int off_label):
    cdef Py_ssize_t n = origins.shape[0]
    cdef Py_ssize_t nb = labels.shape[0]
    dist_arr = np.full(n, np.inf)
    lab_arr = np.zeros(n, dtype=np.int32)
    act_arr = np.full(n, -1, dtype=np.int32)
    cdef double[::1] dist = dist_arr
    cdef cnp.int32_t[::1] lab = lab_arr
    cdef cnp.int32_t[::1] act = act_arr
    cdef Py_ssize_t i, b
    cdef double o0, o1, o2, d0, d1, d2, tg, py, best
    cdef double q0, q1, q2, ox, oy, oz, dx, dy, dz, ix, iy, iz
    cdef double t1, t2, t3, t4, t5, t6, tent, tex
    cdef cnp.int32_t blab, bact
    with nogil:
        for i in range(n):
            o0 = origins[i, 0]
            o1 = origins[i, 1]
            o2 = origins[i, 2]
            d0 = dirs[i, 0]
            d1 = dirs[i, 1]
            d2 = dirs[i, 2]
            best = INFINITY
            blab = 0
            bact = -1
            if has_ground:
                tg = (ground_z - o2) / d2
                if tg > 0.0 and tg <= max_range:
                    py = o1 + tg * d1
                    best = tg
                    if fabs(py - road_center_y) <= road_half_width:
                        blab = road_label
                    else:
                        blab = off_label
            for b in range(nb):
                q0 = o0 - trans[b, 0]
                q1 = o1 - trans[b, 1]
                q2 = o2 - trans[b, 2]
                ox = q0 * rot[b, 0, 0] + q1 * rot[b, 0, 1] + q2 * rot[b, 0, 2]
                oy = q0 * rot[b, 1, 0] + q1 * rot[b, 1, 1] + q2 * rot[b, 1, 2]
                oz = q0 * rot[b, 2, 0] + q1 * rot[b, 2, 1] + q2 * rot[b, 2, 2]
                dx = d0 * rot[b, 0, 0] + d1 * rot[b, 0, 1] + d2 * rot[b, 0, 2]
                dy = d0 * rot[b, 1, 0] + d1 * rot[b, 1, 1] + d2 * rot[b, 1, 2]
                dz = d0 * rot[b, 2, 0] + d1 * rot[b, 2, 1] + d2 * rot[b, 2, 2]
                ix = 1.0 / dx
                iy = 1.0 / dy
                iz = 1.0 / dz
                t1 = (lo[b, 0] - ox) * ix
                t2 = (hi[b, 0] - ox) * ix
                t3 = (lo[b, 1] - oy) * iy
                t4 = (hi[b, 1] - oy) * iy
                t5 = (lo[b, 2] - oz) * iz
                t6 = (hi[b, 2] - oz) * iz
                tent = fmax(fmax(fmin(t1, t2), fmin(t3, t4)), fmin(t5, t6))
                tex = fmin(fmin(fmax(t1, t2), fmax(t3, t4)), fmax(t5, t6))
                if tent <= tex and tent > 0.0 and tent <= max_range and tent < best:
                    best = tent
                    blab = labels[b]
                    bact = actors[b]
            dist[i] = best
            lab[i] = blab
            act[i] = bact
    return dist_arr, lab_arr, act_arr


def trace_expand(const double[:, ::1] points, const cnp.uint8_t[::1] labels, double r):
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t i, w
    cdef double x, y, z, L, d, ux, uy, uz
    cdef Py_ssize_t total = 0
    cdef long skipped = 0
    with nogil:
        for i in range(n):
            x = points[i, 0]
            y = points[i, 1]
            z = points[i, 2]
            L = sqrt(x * x + y * y + z * z)
            if L > 0.0:
                total += 1
                d = L - r
                while d > 0.0:
                    total += 1
                    d = d - r
            else:
                skipped += 1
    pos_arr = np.empty((total, 3))
    lab_arr = np.empty(total, dtype=np.uint8)
    cdef double[:, ::1] pos = pos_arr
    cdef cnp.uint8_t[::1] lab = lab_arr
    w = 0
    with nogil:
        for i in range(n):
            x = points[i, 0]
            y = points[i, 1]
            z = points[i, 2]
            L = sqrt(x * x + y * y + z * z)
            if not L > 0.0:
                continue
            pos[w, 0] = x
            pos[w, 1] = y
            pos[w, 2] = z
            lab[w] = labels[i]
            w += 1
            ux = x / L
            uy = y / L
            uz = z / L
            d = L - r
            while d > 0.0:
                pos[w, 0] = d * ux
                pos[w, 1] = d * uy
                pos[w, 2] = d * uz
                lab[w] = FREE_RAW
                w += 1
                d = d - r
    return pos_arr, lab_arr, skipped


cdef inline int _bin_one(cnp.uint32_t[:, :, :, ::1] counts,
                         double px, double py, double pz, int lab,
                         double xmin, double ymin, double zmin,
                         double xmax, double ymax, double zmax,
                         double csx, double csy, double csz,
                         Py_ssize_t nx, Py_ssize_t ny, Py_ssize_t nz) noexcept nogil:
    """Add one observation; returns 1 if dropped out-of-bounds, else 0."""
    cdef Py_ssize_t ix, iy, iz
    if not (px >= xmin and px < xmax and py >= ymin and py < ymax
            and pz >= zmin and pz < zmax):
        return 1
    ix = <Py_ssize_t>floor((px - xmin) / csx)
    iy = <Py_ssize_t>floor((py - ymin) / csy)
    iz = <Py_ssize_t>floor((pz - zmin) / csz)
    if ix < 0:
        ix = 0
    elif ix > nx - 1:
        ix = nx - 1
    if iy < 0:
        iy = 0
    elif iy > ny - 1:
        iy = ny - 1
    if iz < 0:
        iz = 0
    elif iz > nz - 1:
        iz = nz - 1
    counts[ix, iy, iz, lab] += 1
    return 0


def bin_points(cnp.uint32_t[:, :, :, ::1] counts, const double[:, ::1] positions,
               const cnp.uint8_t[::1] labels, const double[::1] mins, const double[::1] maxs,
               const double[::1] cells, const cnp.uint8_t[::1] lut):
    cdef Py_ssize_t n = positions.shape[0]
    cdef Py_ssize_t nx = counts.shape[0], ny = counts.shape[1], nz = counts.shape[2]
    cdef double xmin = mins[0], ymin = mins[1], zmin = mins[2]
    cdef double xmax = maxs[0], ymax = maxs[1], zmax = maxs[2]
    cdef double csx = cells[0], csy = cells[1], csz = cells[2]
    cdef Py_ssize_t i
    cdef int lab
    cdef long oob = 0, unl = 0
    with nogil:
        for i in range(n):
            lab = lut[labels[i]]
            if lab == DROP:
                unl += 1
                continue
            oob += _bin_one(counts, positions[i, 0], positions[i, 1], positions[i, 2],
                            lab, xmin, ymin, zmin, xmax, ymax, zmax,
                            csx, csy, csz, nx, ny, nz)
    return oob, unl


def trace_accumulate(const double[:, ::1] points, const cnp.uint8_t[::1] labels, double r,
                     const double[:, ::1] rot, const double[::1] trans,
                     cnp.uint32_t[:, :, :, ::1] counts,
                     const double[::1] mins, const double[::1] maxs, const double[::1] cells,
                     const cnp.uint8_t[::1] lut):
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t nx = counts.shape[0], ny = counts.shape[1], nz = counts.shape[2]
    cdef double xmin = mins[0], ymin = mins[1], zmin = mins[2]
    cdef double xmax = maxs[0], ymax = maxs[1], zmax = maxs[2]
    cdef double csx = cells[0], csy = cells[1], csz = cells[2]
    cdef double r00 = rot[0, 0], r01 = rot[0, 1], r02 = rot[0, 2]
    cdef double r10 = rot[1, 0], r11 = rot[1, 1], r12 = rot[1, 2]
    cdef double r20 = rot[2, 0], r21 = rot[2, 1], r22 = rot[2, 2]
    cdef double t0 = trans[0], t1 = trans[1], t2 = trans[2]
    cdef int lab_free = lut[FREE_RAW]
    cdef Py_ssize_t i
    cdef double x, y, z, L, d, ux, uy, uz, sx, sy, sz, gx, gy, gz
    cdef int lab
    cdef long skipped = 0, oob = 0, unl = 0
    with nogil:
        for i in range(n):
            x = points[i, 0]
            y = points[i, 1]
            z = points[i, 2]
            L = sqrt(x * x + y * y + z * z)
            if not L > 0.0:
                skipped += 1
                continue
            lab = lut[labels[i]]
            if lab == DROP:
                unl += 1
            else:
                gx = x * r00 + y * r01 + z * r02 + t0
                gy = x * r10 + y * r11 + z * r12 + t1
                gz = x * r20 + y * r21 + z * r22 + t2
                oob += _bin_one(counts, gx, gy, gz, lab, xmin, ymin, zmin,
                                xmax, ymax, zmax, csx, csy, csz, nx, ny, nz)
            ux = x / L
            uy = y / L
            uz = z / L
            d = L - r
            while d > 0.0:
                sx = d * ux
                sy = d * uy
                sz = d * uz
                gx = sx * r00 + sy * r01 + sz * r02 + t0
                gy = sx * r10 + sy * r11 + sz * r12 + t1
                gz = sx * r20 + sy * r21 + sz * r22 + t2
                oob += _bin_one(counts, gx, gy, gz, lab_free, xmin, ymin, zmin,
                                xmax, ymax, zmax, csx, csy, csz, nx, ny, nz)
                d = d - r
    return skipped, oob, unl

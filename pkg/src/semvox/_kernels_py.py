"""Pure-numpy implementations of the hot kernels.

This module is the fallback backend used when the compiled extension
(``semvox._kernels``) is unavailable; it is also the arithmetic reference.
Every formula here is written with an explicit evaluation order that the
Cython kernels replicate exactly (and the extension is compiled with
``-ffp-contract=off``), so both backends produce bit-identical outputs.

Kernels:

* ``raycast_boxes``  -- batch ray vs. oriented-box scene intersection.
* ``trace_expand``   -- expand a point cloud into occupied + free observations
  (fixed-step march from each endpoint toward the sensor origin).
* ``bin_points``     -- scatter observations into a per-voxel class-count grid.
* ``trace_accumulate`` -- fused trace_expand + rigid transform + bin_points,
  used by the grid builders to avoid materializing tens of millions of
  free-space samples.
"""

from __future__ import annotations

import numpy as np

from semvox.geometry import apply_rigid

FREE_RAW_ID = 255
_UNLABELED = 255


def raycast_boxes(origins, dirs, max_range, rot, trans, lo, hi, labels, actors,
                  has_ground, ground_z, road_center_y, road_half_width,
                  road_label, off_label):
    """Nearest hit of N rays against B oriented boxes plus an optional ground plane.

    origins, dirs: (N, 3) float64, dirs unit length.
    rot: (B, 3, 3) world-to-local rotations; trans: (B, 3) box origins in world.
    lo, hi: (B, 3) box bounds in the local frame.
    labels, actors: (B,) int32 raw label / owning actor index (-1 static).
    Ground plane: z = ground_z, labeled road_label where |y - road_center_y|
    <= road_half_width else off_label.

    Returns (dist, label, actor): dist inf and label 0 and actor -1 on miss.
    A box counts as hit only through its entry face (entry distance > 0);
    rays starting inside a box pass through it.  Ties prefer the ground,
    then the lowest box index.
    """
    o = np.ascontiguousarray(origins, dtype=np.float64)
    d = np.ascontiguousarray(dirs, dtype=np.float64)
    n = o.shape[0]
    best = np.full(n, np.inf)
    blab = np.zeros(n, dtype=np.int32)
    bact = np.full(n, -1, dtype=np.int32)
    o0, o1, o2 = o[:, 0], o[:, 1], o[:, 2]
    d0, d1, d2 = d[:, 0], d[:, 1], d[:, 2]

    if has_ground:
        with np.errstate(divide="ignore", invalid="ignore"):
            tg = (ground_z - o2) / d2
        ok = (tg > 0.0) & (tg <= max_range)
        if ok.any():
            py = o1 + tg * d1
            road = np.abs(py - road_center_y) <= road_half_width
            best[ok] = tg[ok]
            blab[ok] = np.where(road, np.int32(road_label), np.int32(off_label))[ok]

    nb = len(labels)
    for b in range(nb):
        r = rot[b]
        q0 = o0 - trans[b, 0]
        q1 = o1 - trans[b, 1]
        q2 = o2 - trans[b, 2]
        ox = q0 * r[0, 0] + q1 * r[0, 1] + q2 * r[0, 2]
        oy = q0 * r[1, 0] + q1 * r[1, 1] + q2 * r[1, 2]
        oz = q0 * r[2, 0] + q1 * r[2, 1] + q2 * r[2, 2]
        dx = d0 * r[0, 0] + d1 * r[0, 1] + d2 * r[0, 2]
        dy = d0 * r[1, 0] + d1 * r[1, 1] + d2 * r[1, 2]
        dz = d0 * r[2, 0] + d1 * r[2, 1] + d2 * r[2, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            ix = 1.0 / dx
            iy = 1.0 / dy
            iz = 1.0 / dz
            t1 = (lo[b, 0] - ox) * ix
            t2 = (hi[b, 0] - ox) * ix
            t3 = (lo[b, 1] - oy) * iy
            t4 = (hi[b, 1] - oy) * iy
            t5 = (lo[b, 2] - oz) * iz
            t6 = (hi[b, 2] - oz) * iz
        tent = np.fmax(np.fmax(np.fmin(t1, t2), np.fmin(t3, t4)), np.fmin(t5, t6))
        tex = np.fmin(np.fmin(np.fmax(t1, t2), np.fmax(t3, t4)), np.fmax(t5, t6))
        upd = (tent <= tex) & (tent > 0.0) & (tent <= max_range) & (tent < best)
        if upd.any():
            best[upd] = tent[upd]
            blab[upd] = labels[b]
            bact[upd] = actors[b]
    return best, blab, bact


def trace_expand(points, labels, r):
    """Occupied + free observations for sensor-frame endpoints, per the
    endpoint-to-sensor march: d starts at ||x|| - r and free samples are
    emitted at d * x/||x|| while d > 0, decrementing by r.

    Returns (positions (M,3) float64, labels (M,) uint8 with FREE_RAW_ID for
    free samples, skipped) in per-ray order [occupied_i, free_i1, free_i2, ...].
    Zero-norm endpoints are skipped entirely and counted in ``skipped``.
    """
    pts = np.ascontiguousarray(points, dtype=np.float64)
    labs = np.asarray(labels, dtype=np.uint8)
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    norms = np.sqrt(x * x + y * y + z * z)
    ok = norms > 0.0
    skipped = int(pts.shape[0] - int(ok.sum()))
    p = pts[ok]
    l0 = labs[ok]
    ln = norms[ok]
    m = p.shape[0]
    if m == 0:
        return np.empty((0, 3), dtype=np.float64), np.empty(0, dtype=np.uint8), skipped

    # Per-ray free counts, driven by the same d ladder as the emission loop.
    k = np.zeros(m, dtype=np.int64)
    d = ln - r
    while True:
        alive = d > 0.0
        if not alive.any():
            break
        k += alive
        d = d - r

    total = int(m + int(k.sum()))
    pos = np.empty((total, 3), dtype=np.float64)
    lab = np.empty(total, dtype=np.uint8)
    offs = np.zeros(m, dtype=np.int64)
    np.cumsum(k[:-1] + 1, out=offs[1:])
    pos[offs] = p
    lab[offs] = l0
    ux = p / ln[:, None]
    d = ln - r
    j = 1
    while True:
        alive = d > 0.0
        if not alive.any():
            break
        idx = offs[alive] + j
        pos[idx] = d[alive, None] * ux[alive]
        lab[idx] = FREE_RAW_ID
        d = d - r
        j += 1
    return pos, lab, skipped


def bin_points(counts, positions, labels, mins, maxs, cells, lut):
    """Scatter observations into ``counts`` (X, Y, Z, K) uint32, in place.

    ``labels`` are raw ids; ``lut`` maps raw -> evaluation class, with 255
    meaning drop.  Voxel membership is half-open per axis: min <= p < max,
    index floor((p - min)/cell) clipped to the valid range.

    Returns (out_of_bounds, unlabeled) drop counts.
    """
    nx, ny, nz, k = counts.shape
    pos = np.asarray(positions, dtype=np.float64)
    lab = lut[np.asarray(labels, dtype=np.uint8)]
    x, y, z = pos[:, 0], pos[:, 1], pos[:, 2]
    unl = lab == _UNLABELED
    inb = ((x >= mins[0]) & (x < maxs[0]) & (y >= mins[1]) & (y < maxs[1])
           & (z >= mins[2]) & (z < maxs[2]))
    keep = inb & ~unl
    ix = np.floor((x - mins[0]) / cells[0]).astype(np.int64)
    iy = np.floor((y - mins[1]) / cells[1]).astype(np.int64)
    iz = np.floor((z - mins[2]) / cells[2]).astype(np.int64)
    ix = np.minimum(np.maximum(ix, 0), nx - 1)
    iy = np.minimum(np.maximum(iy, 0), ny - 1)
    iz = np.minimum(np.maximum(iz, 0), nz - 1)
    flat = ((ix * ny + iy) * nz + iz) * k + lab
    np.add.at(counts.reshape(-1), flat[keep], 1)
    n_unl = int(unl.sum())
    n_oob = int((~inb & ~unl).sum())
    return n_oob, n_unl


def trace_accumulate(points, labels, r, rot, trans, counts, mins, maxs, cells, lut):
    """Fused trace_expand + rigid transform (sensor -> grid frame) + bin_points.

    Produces exactly the counts of ``bin_points(apply_rigid(trace_expand(...)))``
    without materializing the free samples.  Returns (skipped, oob, unlabeled).
    """
    pts = np.ascontiguousarray(points, dtype=np.float64)
    labs = np.asarray(labels, dtype=np.uint8)
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    norms = np.sqrt(x * x + y * y + z * z)
    ok = norms > 0.0
    skipped = int(pts.shape[0] - int(ok.sum()))
    p = pts[ok]
    ln = norms[ok]
    l0 = labs[ok]
    if p.shape[0] == 0:
        return skipped, 0, 0
    grid_pos = apply_rigid(p, rot, trans)
    oob, unl = bin_points(counts, grid_pos, l0, mins, maxs, cells, lut)
    ux = p / ln[:, None]
    d = ln - r
    while True:
        alive = d > 0.0
        if not alive.any():
            break
        pos = d[alive, None] * ux[alive]
        grid_pos = apply_rigid(pos, rot, trans)
        free_lab = np.full(pos.shape[0], FREE_RAW_ID, dtype=np.uint8)
        o2, _ = bin_points(counts, grid_pos, free_lab, mins, maxs, cells, lut)
        oob += o2
        d = d - r
    return skipped, oob, unl

"""Independent brute-force reference implementations used by the tests.

Nothing here imports riskprop; each function is a slow, direct transcription
of the rule it checks.
"""

from __future__ import annotations

import math


def naive_propagation(
    risk,
    adjacency,
    phi_accrel,
    phi_distance,
    is_source,
    *,
    max_iterations=50,
    tolerance=1e-4,
    epsilon=1e-9,
    degenerate_span=1e-6,
    full_exclusion=False,
    equation_form=False,
):
    """Line-by-line asymmetric propagation over dense n x n matrices.

    Returns ``(updates, snapshots, max_diffs, converged)`` where ``updates``
    holds one list of ``(delta, r_i_after_clip)`` per iteration and
    ``snapshots`` the scores after each renormalization.
    """
    n = len(risk)
    r = [float(x) for x in risk]
    if any(x < 0 or x > 1 for x in r):
        lo, hi = min(r), max(r)
        if hi == lo:
            r = [min(1.0, max(0.0, x)) for x in r]
        else:
            r = [(x - lo) / (hi - lo) for x in r]

    updates, snapshots, max_diffs = [], [], []
    converged = False
    for _ in range(max_iterations):
        max_diff = 0.0
        sweep = []
        for i in range(n):
            if full_exclusion and not is_source[i]:
                continue
            influence = 0.0
            total_weight = 0.0
            for j in range(n):
                if j == i or not adjacency[i][j] or not is_source[j]:
                    continue
                if r[j] > r[i]:
                    w = phi_accrel[i][j] * (1 - phi_distance[i][j])
                    if equation_form:
                        w = w * max(0.0, r[j] - r[i])
                    influence = influence + w * (r[j] - r[i])
                    total_weight = total_weight + abs(w)
            delta = influence / (total_weight + epsilon)
            r[i] = r[i] + delta
            if r[i] < 0:
                r[i] = 0.0
            if r[i] > 1:
                r[i] = 1.0
            sweep.append((delta, r[i]))
            if abs(delta) > max_diff:
                max_diff = abs(delta)
        lo, hi = min(r), max(r)
        if hi - lo > degenerate_span:
            r = [(x - lo) / (hi - lo) for x in r]
        updates.append(sweep)
        snapshots.append(list(r))
        max_diffs.append(max_diff)
        if max_diff < tolerance:
            converged = True
            break
    return updates, snapshots, max_diffs, converged


def paint_pixels(width, height, objects):
    """Per-pixel maximum over objects covering each pixel.

    ``objects`` is a list of ``(bbox, mask_rows_or_None, score)`` where the
    mask is a list of rows of booleans over the bbox.
    """
    out = [[0.0] * width for _ in range(height)]
    for y in range(height):
        for x in range(width):
            best = 0.0
            for (x0, y0, x1, y1), mask, score in objects:
                if x0 <= x < x1 and y0 <= y < y1:
                    if mask is None or mask[y - y0][x - x0]:
                        best = max(best, score)
            out[y][x] = best
    return out


def gaussian_2d(sigma):
    radius = math.ceil(3 * sigma)
    k = [
        [math.exp(-(dx * dx + dy * dy) / (2 * sigma * sigma)) for dx in range(-radius, radius + 1)]
        for dy in range(-radius, radius + 1)
    ]
    total = sum(sum(row) for row in k)
    return [[v / total for v in row] for row in k], radius


def direct_convolve(image, sigma, replicate=True):
    """Full 2D convolution with a square Gaussian window.

    With ``replicate`` out-of-range reads clamp to the nearest edge pixel;
    otherwise only pixels whose window fits entirely are computed (others
    are None).
    """
    kernel, radius = gaussian_2d(sigma)
    h, w = len(image), len(image[0])
    out = [[None] * w for _ in range(h)]
    for y in range(h):
        for x in range(w):
            inside = radius <= y < h - radius and radius <= x < w - radius
            if not replicate and not inside:
                continue
            acc = 0.0
            for dy in range(-radius, radius + 1):
                yy = min(max(y + dy, 0), h - 1)
                for dx in range(-radius, radius + 1):
                    xx = min(max(x + dx, 0), w - 1)
                    acc += kernel[dy + radius][dx + radius] * image[yy][xx]
            out[y][x] = acc
    return out


def brute_centroid(raster):
    mass = sx = sy = 0.0
    for y, row in enumerate(raster):
        for x, v in enumerate(row):
            mass += v
            sx += x * v
            sy += y * v
    return sx / mass, sy / mass


def brute_centroid_distance(a, b):
    (ax, ay), (bx, by) = brute_centroid(a), brute_centroid(b)
    return (ax - bx) ** 2 + (ay - by) ** 2


def brute_iou(a, b, tau):
    inter = union = 0
    for ra, rb in zip(a, b):
        for va, vb in zip(ra, rb):
            pa, pb = va >= tau, vb >= tau
            inter += pa and pb
            union += pa or pb
    return 1.0 if union == 0 else inter / union

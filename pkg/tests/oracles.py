"""Independent brute-force oracles, deliberately written in plain Python.

These re-derive expected results from first principles (all-pairs scans,
exhaustive enumeration) and share no code with the vectorized production
paths they check.
"""

from __future__ import annotations

import math


def nearest_center_oracle(
    centers: list[tuple[float, float]],
    width: int,
    height: int,
    origin: tuple[int, int] = (0, 0),
) -> list[list[int]]:
    """Per-pixel index of the nearest center; first minimum wins.

    origin places the raster frame: pixel (x, y) samples the point
    (origin_x + x, origin_y + y), so translating centers and origin
    together relabels coordinates without changing the result.
    """
    ox, oy = origin
    grid = []
    for y in range(height):
        row = []
        for x in range(width):
            best_i = 0
            best_d = None
            for i, (cx, cy) in enumerate(centers):
                dx = float(ox + x) - cx
                dy = float(oy + y) - cy
                d = dx * dx + dy * dy
                if best_d is None or d < best_d:
                    best_d = d
                    best_i = i
            row.append(best_i)
        grid.append(row)
    return grid


def neighbor_max_sq_oracle(
    centers: list[tuple[float, float]], assignment: list[list[int]]
) -> list[float]:
    """Max squared distance to rasterized-adjacent cells; inf when isolated."""
    height = len(assignment)
    width = len(assignment[0])
    neighbors: list[set[int]] = [set() for _ in centers]
    for y in range(height):
        for x in range(width):
            a = assignment[y][x]
            if x + 1 < width and assignment[y][x + 1] != a:
                neighbors[a].add(assignment[y][x + 1])
                neighbors[assignment[y][x + 1]].add(a)
            if y + 1 < height and assignment[y + 1][x] != a:
                neighbors[a].add(assignment[y + 1][x])
                neighbors[assignment[y + 1][x]].add(a)
    out = []
    for i, nbrs in enumerate(neighbors):
        if not nbrs:
            out.append(math.inf)
            continue
        best = 0.0
        for j in nbrs:
            dx = centers[i][0] - centers[j][0]
            dy = centers[i][1] - centers[j][1]
            best = max(best, dx * dx + dy * dy)
        out.append(best)
    return out


def label_mask_oracle(
    centers: list[tuple[float, float]],
    width: int,
    height: int,
    center_radius: float,
    origin: tuple[int, int] = (0, 0),
) -> list[list[int]]:
    """Rule-by-rule four-class mask: center > edge > background > object."""
    ox, oy = origin
    assignment = nearest_center_oracle(centers, width, height, origin)
    max_sq = neighbor_max_sq_oracle(centers, assignment)
    radius_sq = center_radius * center_radius
    mask = []
    for y in range(height):
        row = []
        for x in range(width):
            i = assignment[y][x]
            cx, cy = centers[i]
            dx = float(ox + x) - cx
            dy = float(oy + y) - cy
            own_sq = dx * dx + dy * dy
            if own_sq <= radius_sq:
                row.append(3)
                continue
            is_edge = False
            for nx, ny in ((x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)):
                if 0 <= nx < width and 0 <= ny < height and assignment[ny][nx] != i:
                    is_edge = True
                    break
            if is_edge:
                row.append(2)
            elif own_sq > max_sq[i]:
                row.append(0)
            else:
                row.append(1)
        mask.append(row)
    return mask


def best_matching_oracle(
    det_um: list[tuple[float, float]],
    gt_um: list[tuple[float, float]],
    cap_um: float,
) -> tuple[int, float, list[tuple[int, int]]]:
    """Exhaustive search over all one-to-one matchings restricted to pairs
    within the cap: maximum cardinality, then minimum total distance.

    Returns (count, total_distance, pairs with det index ascending).
    """
    feasible: list[list[tuple[int, float]]] = []
    for dx_, dy_ in det_um:
        options = []
        for j, (gx, gy) in enumerate(gt_um):
            dx = dx_ - gx
            dy = dy_ - gy
            d = math.sqrt(dx * dx + dy * dy)
            if d <= cap_um:
                options.append((j, d))
        feasible.append(options)

    best = (0, 0.0, [])

    def recurse(i: int, used: set[int], pairs: list[tuple[int, int]], total: float):
        nonlocal best
        if i == len(det_um):
            count = len(pairs)
            if count > best[0] or (count == best[0] and total < best[1]):
                best = (count, total, list(pairs))
            return
        recurse(i + 1, used, pairs, total)  # detection i unmatched
        for j, d in feasible[i]:
            if j not in used:
                used.add(j)
                pairs.append((i, j))
                recurse(i + 1, used, pairs, total + d)
                pairs.pop()
                used.remove(j)

    recurse(0, set(), [], 0.0)
    return best

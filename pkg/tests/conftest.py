"""Brute-force oracles shared by the test modules.

These are deliberately naive pixel loops, independent of the vectorised
code paths they check.
"""

from collections import deque
import math

import numpy as np
import pytest


def brute_exposed_sides(m):
    h, w = m.shape
    count = 0
    for r in range(h):
        for c in range(w):
            if not m[r, c]:
                continue
            for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                rr, cc = r + dr, c + dc
                if not (0 <= rr < h and 0 <= cc < w) or not m[rr, cc]:
                    count += 1
    return count


def brute_components(m):
    """8-connected components as lists of pixels, in raster order of first pixel."""
    h, w = m.shape
    seen = np.zeros_like(m, dtype=bool)
    comps = []
    for r in range(h):
        for c in range(w):
            if m[r, c] and not seen[r, c]:
                comp = []
                queue = deque([(r, c)])
                seen[r, c] = True
                while queue:
                    y, x = queue.popleft()
                    comp.append((y, x))
                    for dy in (-1, 0, 1):
                        for dx in (-1, 0, 1):
                            yy, xx = y + dy, x + dx
                            if 0 <= yy < h and 0 <= xx < w and m[yy, xx] and not seen[yy, xx]:
                                seen[yy, xx] = True
                                queue.append((yy, xx))
                comps.append(comp)
    return comps


def brute_fill_holes(m):
    """Flood the background from the border through 4-neighbours; the rest is filled."""
    h, w = m.shape
    outside = np.zeros_like(m, dtype=bool)
    queue = deque()
    for r in range(h):
        for c in range(w):
            if (r in (0, h - 1) or c in (0, w - 1)) and not m[r, c]:
                outside[r, c] = True
                queue.append((r, c))
    while queue:
        y, x = queue.popleft()
        for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            yy, xx = y + dy, x + dx
            if 0 <= yy < h and 0 <= xx < w and not m[yy, xx] and not outside[yy, xx]:
                outside[yy, xx] = True
                queue.append((yy, xx))
    return ~outside


def brute_boundary(m):
    h, w = m.shape
    pts = []
    for r in range(h):
        for c in range(w):
            if not m[r, c]:
                continue
            for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                rr, cc = r + dr, c + dc
                if not (0 <= rr < h and 0 <= cc < w) or not m[rr, cc]:
                    pts.append((r, c))
                    break
    return pts


def brute_hausdorff(a, b):
    pa, pb = brute_boundary(a), brute_boundary(b)

    def directed(p, q):
        worst = 0.0
        for (r, c) in p:
            best = min((r - y) ** 2 + (c - x) ** 2 for (y, x) in q)
            worst = max(worst, math.sqrt(best))
        return worst

    return max(directed(pa, pb), directed(pb, pa))


def brute_dice(a, b):
    inter = tot = 0
    for x, y in zip(a.ravel().tolist(), b.ravel().tolist()):
        inter += x and y
        tot += x + y
    return 1.0 if tot == 0 else 2.0 * inter / tot


def disk_mask(radius, n=64, center=None):
    c = n / 2.0 if center is None else center
    rows, cols = np.mgrid[0:n, 0:n] + 0.5
    return (rows - c) ** 2 + (cols - c) ** 2 < radius ** 2


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])

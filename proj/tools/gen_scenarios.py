#!/usr/bin/env python3
"""Draws the bundled scenario maps (1 m cells, north up) into scenarios/*.map."""
import pathlib


def blank(w, h):
    return [[False] * w for _ in range(h)]


def rect(grid, x0, y0, x1, y1):
    # half-open [x0, x1) x [y0, y1) in metres, y measured upward
    for y in range(y0, y1):
        for x in range(x0, x1):
            grid[y][x] = True


def render(grid, start, goal):
    h, w = len(grid), len(grid[0])
    lines = ["biam-map v1", "cell 1"]
    for row in range(h):
        y = h - 1 - row
        chars = []
        for x in range(w):
            if (x, y) == start:
                chars.append("S")
            elif (x, y) == goal:
                chars.append("G")
            else:
                chars.append("#" if grid[y][x] else ".")
        lines.append("".join(chars))
    return "\n".join(lines) + "\n"


def bug_trap():
    g = blank(100, 100)
    rect(g, 25, 60, 75, 63)   # roof
    rect(g, 25, 25, 28, 63)   # left wall
    rect(g, 72, 25, 75, 63)   # right wall
    rect(g, 25, 25, 42, 28)   # lips around the downward opening
    rect(g, 58, 25, 75, 28)
    return render(g, (50, 42), (50, 88))


def maze():
    g = blank(100, 100)
    rect(g, 0, 25, 62, 27)
    rect(g, 76, 25, 100, 27)
    rect(g, 0, 50, 24, 52)
    rect(g, 38, 50, 100, 52)
    rect(g, 0, 75, 62, 77)
    rect(g, 76, 75, 100, 77)
    rect(g, 48, 27, 50, 44)   # stubs forcing detours inside the bands
    rect(g, 48, 58, 50, 75)
    rect(g, 10, 8, 30, 12)
    rect(g, 70, 86, 90, 90)
    return render(g, (50, 10), (50, 90))


def office():
    g = blank(200, 200)
    # hall walls with doors
    rect(g, 0, 68, 24, 72)
    rect(g, 36, 68, 96, 72)
    rect(g, 108, 68, 160, 72)
    rect(g, 172, 68, 200, 72)
    rect(g, 0, 128, 40, 132)
    rect(g, 52, 128, 112, 132)
    rect(g, 124, 128, 168, 132)
    rect(g, 180, 128, 200, 132)
    # room partitions
    rect(g, 64, 0, 68, 68)
    rect(g, 132, 0, 136, 68)
    rect(g, 64, 132, 68, 200)
    rect(g, 132, 132, 136, 200)
    # desks and cabinets
    for x0, y0 in [(12, 40), (40, 12), (84, 20), (100, 44), (152, 24), (180, 44),
                   (20, 160), (40, 180), (84, 152), (104, 176), (148, 156), (156, 180)]:
        rect(g, x0, y0, x0 + 12, y0 + 6)
    # pillars in the hall
    for x0 in range(20, 200, 40):
        rect(g, x0, 96, x0 + 4, 104)
    return render(g, (30, 30), (170, 170))


if __name__ == "__main__":
    out = pathlib.Path(__file__).resolve().parent.parent / "scenarios"
    out.mkdir(exist_ok=True)
    for name, fn in [("bug_trap", bug_trap), ("maze", maze), ("office", office)]:
        (out / f"{name}.map").write_text(fn())

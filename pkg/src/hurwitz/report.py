"""Tables and figures for a finished run.

``write_report`` takes certificate JSON (as produced by ``hurwitz run``) and
writes a tab-separated table of the conjugates next to PNG figures of their
fibres over the branch points and the loops used for the monodromy."""

from __future__ import annotations

import csv
import os
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import mpmath  # noqa: E402
import numpy as np  # noqa: E402

from .monodromy import RationalMap  # noqa: E402
from .sphere import INF, delaunay_sphere, dual_graph, generator_paths  # noqa: E402

MARKERS = ["x", "o", "s", "^", "D", "v", "P", "*"]

plt.rc("figure", figsize=(5, 5), dpi=120)
plt.rc("axes", linewidth=0.6)
plt.rc("font", size=9)


def _parse_q(q):
    if q == INF or q is None:
        return INF
    from fractions import Fraction

    return complex(Fraction(q)) if isinstance(q, str) else complex(q)


def write_table(certs: Sequence[dict], path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["conjugate", "matches", "coordinate", "minpoly_degree", "re", "im"])
        for n, c in enumerate(certs):
            for j, x in enumerate(c["coordinates"]):
                w.writerow([n, int(bool(c["matches"])), j, len(x["minpoly"]) - 1, x["root"]["re"], x["root"]["im"]])


def fibre_points(f: RationalMap, Q: Sequence) -> list[list[complex]]:
    out = []
    with mpmath.workdps(40):
        for q in Q:
            pts = f.fiber(q, tol=mpmath.mpf(10) ** -8)
            out.append([complex(z) for z in pts if z != INF])
    return out


def plot_fibres(f: RationalMap, Q: Sequence, path: str, title: str = "") -> None:
    fig, ax = plt.subplots()
    fibres = fibre_points(f, Q)
    allz = np.array([z for pts in fibres for z in pts] or [0j])
    cx, cy = (allz.real.max() + allz.real.min()) / 2, (allz.imag.max() + allz.imag.min()) / 2
    half = 0.6 * max(np.ptp(allz.real), np.ptp(allz.imag), 1.0)
    for i, pts in enumerate(fibres):
        if not pts:
            continue
        z = np.array(pts)
        ax.scatter(z.real, z.imag, marker=MARKERS[i % len(MARKERS)], s=22, lw=0.8, label=f"$f^{{-1}}(Q_{{{i + 1}}})$")
    ax.set_xlim(cx - half, cx + half)
    ax.set_ylim(cy - half, cy + half)
    ax.set_aspect("equal")
    ax.axhline(0, color="0.85", lw=0.5, zorder=0)
    ax.axvline(0, color="0.85", lw=0.5, zorder=0)
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False, fontsize=7, loc="best")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_loops(Q: Sequence, path: str) -> None:
    """Voronoi dual of the branch points and the lassos, in the chart."""
    tri = delaunay_sphere(list(Q))
    g = dual_graph(tri, list(Q))
    loops, order = generator_paths(g, list(range(len(Q))))
    fig, ax = plt.subplots()
    seen = set()
    for (u, v), e in g.edges.items():
        if (v, u) in seen:
            continue
        seen.add((u, v))
        ts = np.linspace(0, 1, 40)
        pts = [e.point(t) for t in ts]
        if any(p == INF for p in pts):
            continue
        z = np.array(pts, dtype=complex)
        ax.plot(z.real, z.imag, color="0.7", lw=0.6)
    for q in Q:
        if q != INF:
            ax.plot([q.real], [q.imag], "k.", ms=6)
    b = g.centers[g.basepoint]
    if b != INF:
        ax.plot([b.real], [b.imag], "r*", ms=8, label="basepoint")
    for k, (cell, loop) in enumerate(zip(order, loops)):
        pts = []
        for u, v in zip(loop, loop[1:]):
            if u != v:
                pts += [g.edges[(u, v)].point(t) for t in np.linspace(0, 1, 20)]
        pts = [z for z in pts if z != INF]
        z = np.array(pts, dtype=complex) + 0.01 * (k + 1) * (1 + 1j)
        ax.plot(z.real, z.imag, lw=0.9, label=f"loop {cell + 1}")
    ax.set_aspect("equal")
    ax.legend(frameon=False, fontsize=7)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def write_report(certs: Sequence[dict], points: Sequence, outdir: str) -> list[str]:
    """Write ``conjugates.tsv``, one fibre plot per conjugate and a loop plot; return the paths."""
    os.makedirs(outdir, exist_ok=True)
    Q = [_parse_q(q) for q in points]
    written = []
    table = os.path.join(outdir, "conjugates.tsv")
    write_table(certs, table)
    written.append(table)
    for n, c in enumerate(certs):
        f = RationalMap.from_json(c["map"])
        path = os.path.join(outdir, f"fibres_{n}.png")
        tag = "matches" if c["matches"] else "other"
        plot_fibres(f, Q, path, title=f"conjugate {n} ({tag})")
        written.append(path)
    path = os.path.join(outdir, "loops.png")
    plot_loops(Q, path)
    written.append(path)
    return written

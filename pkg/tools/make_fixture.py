"""Regenerate the bundled synthetic shot export.

Thirteen players across four shooting archetypes: twelve exceed the
1000-attempt threshold, one stays under it, and a handful of
out-of-bounds rows exercise the exclusion pass. Deterministic for a
fixed seed; run from the repository root:

    python3 tools/make_fixture.py
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

SEASONS = ["2018-19", "2019-20", "2020-21", "2021-22", "2022-23", "2023-24"]
HOOP = np.array([25.0, 5.25])

# mixture weights over (rim, arc, corners, midrange)
ARCHETYPES = {
    "rim": (0.70, 0.10, 0.05, 0.15),
    "arc": (0.15, 0.65, 0.10, 0.10),
    "corner": (0.20, 0.15, 0.55, 0.10),
    "mid": (0.25, 0.15, 0.10, 0.50),
}

PLAYERS = [
    ("p01", "Alba Rines", "guard", "arc", 1450),
    ("p02", "Bram Teller", "guard", "arc", 1280),
    ("p03", "Cleo Vance", "guard", "mid", 1190),
    ("p04", "Dino Marsh", "guard", "corner", 1120),
    ("p05", "Ezra Quill", "guard-forward", "arc", 1340),
    ("p06", "Faye Ondra", "forward-guard", "corner", 1060),
    ("p07", "Gus Halden", "forward", "mid", 1510),
    ("p08", "Hale Birch", "forward", "corner", 1230),
    ("p09", "Iris Kotler", "forward", "rim", 1085),
    ("p10", "Jory Selwin", "center-forward", "rim", 1400),
    ("p11", "Kip Ashford", "forward-center", "mid", 1150),
    ("p12", "Lena Droste", "center", "rim", 1320),
    ("p13", "Milo Exton", "center", "rim", 400),  # below the retention threshold
]


def draw_points(rng: np.random.Generator, weights, n: int) -> np.ndarray:
    comps = rng.choice(4, size=n, p=weights)
    pts = np.empty((n, 2))
    rim = comps == 0
    pts[rim] = rng.normal(HOOP, [2.5, 2.5], size=(rim.sum(), 2))
    arc = comps == 1
    theta = rng.uniform(0.15 * np.pi, 0.85 * np.pi, size=arc.sum())
    radius = rng.normal(23.0, 1.2, size=arc.sum())
    pts[arc] = HOOP + np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])
    corner = comps == 2
    side = rng.choice([3.0, 47.0], size=corner.sum())
    pts[corner] = np.column_stack(
        [rng.normal(side, 1.5), rng.normal(3.5, 1.5, size=corner.sum())]
    )
    mid = comps == 3
    pts[mid] = rng.normal([25.0, 15.0], [6.0, 3.5], size=(mid.sum(), 2))
    return pts


def main() -> None:
    rng = np.random.default_rng(20240127)
    rows = []
    for pid, name, position, archetype, n in PLAYERS:
        pts = draw_points(rng, ARCHETYPES[archetype], n)
        dist = np.linalg.norm(pts - HOOP, axis=1)
        p_make = np.clip(0.68 - 0.013 * dist, 0.25, 0.95)
        made = rng.uniform(size=n) < p_make
        seasons = rng.choice(SEASONS, size=n)
        for (x, y), m, season in zip(pts, made, seasons):
            rows.append([pid, name, position, f"{x:.2f}", f"{y:.2f}", int(m), season])
        # a few clearly impossible attempts for some players
        if pid in ("p01", "p07", "p12"):
            for x, y in ((-4.0, 10.0), (55.0, 20.0), (20.0, 52.0)):
                rows.append([pid, name, position, f"{x:.2f}", f"{y:.2f}", 0, SEASONS[0]])

    out = Path(__file__).resolve().parents[1] / "src" / "court_fda" / "data" / "fixture_shots.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["player_id", "player_name", "position", "x_ft", "y_ft", "made", "season"])
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows -> {out}")


if __name__ == "__main__":
    main()

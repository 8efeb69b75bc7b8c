#!/usr/bin/env python3
"""Writes the sample datasets under data/.

Boundaries are coarse hand-made outlines (AU) or tile maps (NZ, US) in
lon/lat; flows are synthetic gravity-model counts with a fixed seed.
"""
import json
import math
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent / "data"


def on_line(a, b, lon):
    t = (lon - a[0]) / (b[0] - a[0])
    return (lon, round(a[1] + t * (b[1] - a[1]), 6))


def au_regions():
    vic_a, vic_b = (149.9, -37.5), (148.2, -36.8)
    return [
        ("WA", "Western Australia", 2.8, [
            (129, -15), (129, -26), (129, -31.7), (123.5, -33.9), (117.5, -35.1), (115, -34.3),
            (115.1, -30), (113.2, -26), (114, -22), (117, -20.5), (121, -19.5), (122.5, -17),
            (125, -14.6), (127, -14)]),
        ("NT", "Northern Territory", 0.25, [
            (129, -15), (130, -12.5), (132.5, -11.5), (136.8, -12.2), (136, -13.5), (135.5, -15),
            (138, -16.5), (138, -26), (129, -26)]),
        ("SA", "South Australia", 1.8, [
            (129, -26), (138, -26), (141, -26), (141, -29), (141, -34), (141, -38), (140, -37.8),
            (138.5, -35.6), (136.5, -35.8), (135.5, -34.8), (134, -32.8), (131, -31.5), (129, -31.7)]),
        ("QLD", "Queensland", 5.3, [
            (138, -16.5), (139.5, -17.5), (141.5, -16.5), (141.6, -12.6), (142.5, -10.7), (143.8, -14),
            (145.3, -15), (146.3, -19), (149.3, -21.5), (151.8, -24), (153.2, -25.8), (153.5, -28.2),
            (148.9, -29), (141, -29), (141, -26), (138, -26)]),
        # A channel south of the ACT keeps the ring simple.
        ("NSW", "New South Wales", 8.2, [
            (141, -29), (148.9, -29), (153.5, -28.2), (153, -31), (151.3, -33.6), (150.1, -36.5),
            vic_a, on_line(vic_a, vic_b, 149.2), (149.2, -35.9), (149.4, -35.9), (149.4, -35.1),
            (148.8, -35.1), (148.8, -35.9), (149.0, -35.9), on_line(vic_a, vic_b, 149.0), vic_b,
            (141, -34)]),
        ("ACT", "Australian Capital Territory", 0.46, [
            (148.8, -35.1), (149.4, -35.1), (149.4, -35.9), (149.2, -35.9), (149.0, -35.9), (148.8, -35.9)]),
        ("VIC", "Victoria", 6.7, [
            (141, -34), vic_b, vic_a, (147, -38.2), (146.3, -39), (144.8, -38.4), (143.5, -38.8), (141, -38)]),
        ("TAS", "Tasmania", 0.57, [
            (144.6, -40.7), (148.3, -40.9), (148.3, -42.2), (147.2, -43.5), (146, -43.6), (145.2, -42.2)]),
    ]


US_TILES = [
    ("AK", 0, 0), ("ME", 11, 0), ("VT", 10, 1), ("NH", 11, 1),
    ("WA", 1, 2), ("ID", 2, 2), ("MT", 3, 2), ("ND", 4, 2), ("MN", 5, 2), ("IL", 6, 2), ("WI", 7, 2),
    ("MI", 8, 2), ("NY", 9, 2), ("RI", 10, 2), ("MA", 11, 2),
    ("OR", 1, 3), ("NV", 2, 3), ("WY", 3, 3), ("SD", 4, 3), ("IA", 5, 3), ("IN", 6, 3), ("OH", 7, 3),
    ("PA", 8, 3), ("NJ", 9, 3), ("CT", 10, 3),
    ("CA", 1, 4), ("UT", 2, 4), ("CO", 3, 4), ("NE", 4, 4), ("MO", 5, 4), ("KY", 6, 4), ("WV", 7, 4),
    ("VA", 8, 4), ("MD", 9, 4), ("DE", 10, 4),
    ("AZ", 2, 5), ("NM", 3, 5), ("KS", 4, 5), ("AR", 5, 5), ("TN", 6, 5), ("NC", 7, 5), ("SC", 8, 5),
    ("DC", 9, 5),
    ("OK", 4, 6), ("LA", 5, 6), ("MS", 6, 6), ("AL", 7, 6), ("GA", 8, 6),
    ("HI", 0, 7), ("TX", 4, 7), ("FL", 9, 7),
]

NZ_TILES = [
    ("NTL", "Northland", 1, 0), ("AUK", "Auckland", 1, 1), ("WKO", "Waikato", 1, 2),
    ("BOP", "Bay of Plenty", 2, 2), ("GIS", "Gisborne", 3, 2), ("TKI", "Taranaki", 0, 3),
    ("MWT", "Manawatu-Whanganui", 1, 3), ("HKB", "Hawke's Bay", 2, 3), ("WGN", "Wellington", 1, 4),
    ("TAS", "Tasman", -1, 5), ("NSN", "Nelson", 0, 5), ("WTC", "West Coast", -2, 6),
    ("CAN", "Canterbury", -1, 6), ("MBH", "Marlborough", 0, 6), ("OTA", "Otago", -2, 7),
    ("STL", "Southland", -3, 7),
]


def tile(lon0, lat0, size, col, row):
    x, y = lon0 + col * size, lat0 - row * size
    return [(x, y), (x + size, y), (x + size, y - size), (x, y - size)]


def feature_collection(regions):
    feats = []
    for rid, name, ring in regions:
        coords = [[list(p) for p in ring] + [list(ring[0])]]
        feats.append({"type": "Feature", "id": rid, "properties": {"id": rid, "name": name},
                      "geometry": {"type": "Polygon", "coordinates": coords}})
    return {"type": "FeatureCollection", "features": feats}


def centre(ring):
    return (sum(p[0] for p in ring) / len(ring), sum(p[1] for p in ring) / len(ring))


def gravity(origins, dests, rng, diagonal=False):
    """origins/dests: (id, weight, (lon, lat)). Returns an integer matrix."""
    rows = []
    for oid, ow, oc in origins:
        row = []
        for did, dw, dc in dests:
            if oid == did and not diagonal:
                row.append(0)
                continue
            d = math.hypot(oc[0] - dc[0], oc[1] - dc[1])
            v = 400.0 * ow * dw / (1.0 + d / 4.0) * rng.uniform(0.6, 1.4)
            row.append(int(round(v)))
        rows.append(row)
    return rows


def write_csv(path, origins, dests, rows):
    lines = ["origin," + ",".join(dests)]
    for oid, row in zip(origins, rows):
        lines.append(oid + "," + ",".join(str(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def write_json(path, obj):
    path.write_text(json.dumps(obj, indent=1) + "\n")


def main():
    rng = random.Random(20161)

    au = au_regions()
    (ROOT / "au").mkdir(parents=True, exist_ok=True)
    write_json(ROOT / "au" / "boundaries.geojson", feature_collection([(r[0], r[1], r[3]) for r in au]))
    side = [(r[0], r[2], centre(r[3])) for r in au]
    write_csv(ROOT / "au" / "flows.csv", [r[0] for r in au], [r[0] for r in au], gravity(side, side, rng))

    us = [(rid, rid, tile(-125.0, 50.0, 2.5, c, r)) for rid, c, r in US_TILES]
    (ROOT / "us").mkdir(exist_ok=True)
    write_json(ROOT / "us" / "boundaries.geojson", feature_collection(us))
    us_side = [(rid, rng.uniform(0.3, 6.0), centre(ring)) for rid, _, ring in us]
    write_csv(ROOT / "us" / "flows.csv", [u[0] for u in us], [u[0] for u in us], gravity(us_side, us_side, rng))
    write_json(ROOT / "us" / "groups.json", [
        {"group_id": "PACIFIC", "members": ["WA", "OR", "ID", "NV", "CA"]},
        {"group_id": "TRISTATE", "members": ["NY", "PA", "NJ", "CT"]},
    ])

    nz = [(rid, name, tile(172.0, -35.0, 1.2, c, r)) for rid, name, c, r in NZ_TILES]
    (ROOT / "nz").mkdir(exist_ok=True)
    write_json(ROOT / "nz" / "boundaries.geojson", feature_collection(nz))
    nz_side = [(rid, rng.uniform(0.2, 3.0), centre(ring)) for rid, _, ring in nz]
    write_csv(ROOT / "nz" / "flows.csv", [n[0] for n in nz], [n[0] for n in nz], gravity(nz_side, nz_side, rng))

    # Cross-border flows: distance plays no part across the Pacific.
    (ROOT / "nz_us").mkdir(exist_ok=True)
    rows = [[int(round(40.0 * ow * dw * rng.uniform(0.5, 1.5))) for _, dw, _ in us_side] for _, ow, _ in nz_side]
    write_csv(ROOT / "nz_us" / "flows.csv", [n[0] for n in nz], [u[0] for u in us], rows)


if __name__ == "__main__":
    main()

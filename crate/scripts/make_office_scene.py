#!/usr/bin/env python3
"""Regenerates scenes/office.scene.json: a 15 x 3.5 x 3.3 m office shell with
six material groups (walls, door, floor, ceiling, desk, glass), three
transmitters and one receiver. Door and glass panels sit 2 cm proud of their
wall so no two surfaces are coincident."""

import json
import os

LX, LY, LZ = 15.0, 3.5, 3.3


def quad(v, t, a, b, c, d):
    base = len(v)
    v.extend([a, b, c, d])
    t.append([base, base + 1, base + 2])
    t.append([base, base + 2, base + 3])


def box(v, t, lo, hi):
    (x0, y0, z0), (x1, y1, z1) = lo, hi
    quad(v, t, [x0, y0, z0], [x1, y0, z0], [x1, y1, z0], [x0, y1, z0])  # bottom
    quad(v, t, [x0, y0, z1], [x1, y0, z1], [x1, y1, z1], [x0, y1, z1])  # top
    quad(v, t, [x0, y0, z0], [x1, y0, z0], [x1, y0, z1], [x0, y0, z1])  # y0
    quad(v, t, [x0, y1, z0], [x1, y1, z0], [x1, y1, z1], [x0, y1, z1])  # y1
    quad(v, t, [x0, y0, z0], [x0, y1, z0], [x0, y1, z1], [x0, y0, z1])  # x0
    quad(v, t, [x1, y0, z0], [x1, y1, z0], [x1, y1, z1], [x1, y0, z1])  # x1


def mesh(object_id, material, thickness, build):
    v, t = [], []
    build(v, t)
    return {
        "object_id": object_id,
        "material": material,
        "thickness_m": thickness,
        "vertices": v,
        "triangles": t,
    }


def walls(v, t):
    quad(v, t, [0, 0, 0], [LX, 0, 0], [LX, 0, LZ], [0, 0, LZ])      # y = 0
    quad(v, t, [0, LY, 0], [LX, LY, 0], [LX, LY, LZ], [0, LY, LZ])  # y = LY
    quad(v, t, [0, 0, 0], [0, LY, 0], [0, LY, LZ], [0, 0, LZ])      # x = 0
    quad(v, t, [LX, 0, 0], [LX, LY, 0], [LX, LY, LZ], [LX, 0, LZ])  # x = LX


scene = {
    "frequency_hz": 2.437e9,
    "meshes": [
        mesh("walls", "concrete", 0.1, walls),
        mesh("floor", "floorboard", 0.1,
             lambda v, t: quad(v, t, [0, 0, 0], [LX, 0, 0], [LX, LY, 0], [0, LY, 0])),
        mesh("ceiling", "ceiling_board", 0.1,
             lambda v, t: quad(v, t, [0, 0, LZ], [LX, 0, LZ], [LX, LY, LZ], [0, LY, LZ])),
        mesh("door", "wood", 0.04,
             lambda v, t: quad(v, t, [1.0, 0.02, 0.0], [1.9, 0.02, 0.0],
                               [1.9, 0.02, 2.1], [1.0, 0.02, 2.1])),
        mesh("glass", "glass", 0.01,
             lambda v, t: quad(v, t, [5.0, 3.48, 0.9], [8.0, 3.48, 0.9],
                               [8.0, 3.48, 2.4], [5.0, 3.48, 2.4])),
        mesh("desk", "chipboard", 0.04,
             lambda v, t: box(v, t, (9.6, 1.1, 0.72), (11.2, 1.9, 0.76))),
    ],
    "transmitters": [
        {"id": "tx_central", "position": [7.2, 1.6, 2.8], "power_dbm": 10.0, "gain_dbi": 0.0},
        {"id": "tx_corner_a", "position": [0.8, 0.7, 2.6], "power_dbm": 10.0, "gain_dbi": 0.0},
        {"id": "tx_corner_b", "position": [14.2, 2.9, 2.6], "power_dbm": 10.0, "gain_dbi": 0.0},
    ],
    "receivers": [
        {"id": "rx_center", "position": [7.5, 1.75, 1.2], "gain_dbi": 0.0},
    ],
}

out = os.path.join(os.path.dirname(__file__), "..", "scenes", "office.scene.json")
with open(out, "w") as f:
    json.dump(scene, f, indent=2)
    f.write("\n")
print(f"wrote {os.path.normpath(out)}")

#!/usr/bin/env python3
"""Regenerates the shipped test feeders under data/feeders/.

All quantities are written in per-unit on the feeder's declared base.
Injections follow the generation-positive convention (loads are negative).
"""
import json
import math
import pathlib

import numpy as np

OUT = pathlib.Path(__file__).resolve().parents[2] / "data" / "feeders"


def cpair(z):
    return [float(np.real(z)), float(np.imag(z))]


def cmat(m):
    m = np.atleast_2d(m)
    return [[cpair(x) for x in row] for row in m]


def rect(mag, deg):
    return mag * complex(math.cos(math.radians(deg)), math.sin(math.radians(deg)))


def zip_block(a, b, c, s_nom, v_nom=None):
    n = len(s_nom)
    return {
        "a": list(a) if isinstance(a, (list, tuple)) else [a] * n,
        "b": list(b) if isinstance(b, (list, tuple)) else [b] * n,
        "c": list(c) if isinstance(c, (list, tuple)) else [c] * n,
        "s_nom": [cpair(s) for s in s_nom],
        "v_nom": v_nom if v_nom is not None else [1.0] * n,
    }


def write(name, doc):
    path = OUT / name
    path.write_text(json.dumps(doc, indent=1) + "\n")
    print("wrote", path)


def two_bus():
    y = 1.0 / complex(0.02, 0.06)
    return {
        "base_mva": 1.0,
        "nodes": [
            {"id": "0", "kind": "slack", "phases": "a", "v_slack": [[1.0, 0.0]]},
            {"id": "1", "kind": "pq", "phases": "a",
             "zip": zip_block(0.0, 0.0, 1.0, [-complex(0.8, 0.3)])},
        ],
        "branches": [{"from": "0", "to": "1", "y_series": cmat(y)}],
    }


def chain3():
    y12 = 1.0 / complex(0.01, 0.03)
    y23 = 1.0 / complex(0.015, 0.025)
    return {
        "base_mva": 1.0,
        "nodes": [
            {"id": "1", "kind": "slack", "phases": "a"},
            {"id": "2", "kind": "pq", "phases": "a",
             "zip": zip_block(0.0, 0.0, 1.0, [-complex(0.3, 0.1)])},
            {"id": "3", "kind": "pq", "phases": "a",
             "zip": zip_block(0.0, 0.0, 1.0, [-complex(0.4, 0.15)])},
        ],
        "branches": [
            {"from": "1", "to": "2", "y_series": cmat(y12)},
            {"from": "2", "to": "3", "y_series": cmat(y23)},
        ],
    }


def feeder22():
    # 11 kV radial feeder: a 14-bus trunk with three laterals.
    edges = [(1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 8), (8, 9),
             (9, 10), (10, 11), (11, 12), (12, 13), (13, 14),
             (4, 15), (15, 16), (16, 17),
             (7, 18), (18, 19), (19, 20),
             (10, 21), (21, 22)]
    rng = np.random.default_rng(22)
    nodes = [{"id": "1", "kind": "slack", "phases": "a"}]
    loads = {}
    for k in range(2, 23):
        p = rng.uniform(0.02, 0.06)
        pf = rng.uniform(0.85, 0.95)
        q = p * math.tan(math.acos(pf))
        loads[k] = -complex(p, q)
        nodes.append({"id": str(k), "kind": "pq", "phases": "a",
                      "zip": zip_block(0.0, 0.0, 1.0, [loads[k]])})
    branches = []
    for (f, t) in edges:
        trunk = t <= 14
        r = rng.uniform(0.004, 0.008) if trunk else rng.uniform(0.006, 0.012)
        x = r * rng.uniform(0.6, 1.2)
        branches.append({"from": str(f), "to": str(t),
                         "y_series": cmat(1.0 / complex(r, x))})
    return {"base_mva": 1.0, "nodes": nodes, "branches": branches}


# IEEE 13-node line configurations: series impedance (ohm/mile) and shunt
# susceptance (uS/mile), phase order a, b, c restricted to present phases.
def sym(entries, n):
    m = np.zeros((n, n), dtype=complex)
    k = 0
    for i in range(n):
        for j in range(i, n):
            m[i, j] = m[j, i] = entries[k]
            k += 1
    return m


CONFIGS = {
    "601": ("abc", sym([0.3465 + 1.0179j, 0.1560 + 0.5017j, 0.1580 + 0.4236j,
                        0.3375 + 1.0478j, 0.1535 + 0.3849j, 0.3414 + 1.0348j], 3),
            sym([6.2998, -1.9958, -1.2595, 5.9597, -0.7417, 5.6386], 3)),
    "602": ("abc", sym([0.7526 + 1.1814j, 0.1580 + 0.4236j, 0.1560 + 0.5017j,
                        0.7475 + 1.1983j, 0.1535 + 0.3849j, 0.7436 + 1.2112j], 3),
            sym([5.6990, -1.0817, -1.6905, 5.1795, -0.6588, 5.4246], 3)),
    "603": ("bc", sym([1.3294 + 1.3471j, 0.2066 + 0.4591j, 1.3238 + 1.3569j], 2),
            sym([4.7097, -0.8999, 4.6658], 2)),
    "604": ("ac", sym([1.3238 + 1.3569j, 0.2066 + 0.4591j, 1.3294 + 1.3471j], 2),
            sym([4.6658, -0.8999, 4.7097], 2)),
    "605": ("c", sym([1.3292 + 1.3475j], 1), sym([4.5193], 1)),
    "606": ("abc", sym([0.7982 + 0.4463j, 0.3192 + 0.0328j, 0.2849 - 0.0143j,
                        0.7891 + 0.4041j, 0.3192 + 0.0328j, 0.7982 + 0.4463j], 3),
            sym([96.8897, 0, 0, 96.8897, 0, 96.8897], 3)),
    "607": ("a", sym([1.3425 + 0.5124j], 1), sym([88.9912], 1)),
}


def ieee13():
    base_mva = 5.0
    z_base = 4.16 ** 2 / base_mva
    s_phase = base_mva / 3.0 * 1000.0  # kVA per phase

    def line(f, t, cfg, feet):
        _, z, b = CONFIGS[cfg]
        miles = feet / 5280.0
        z_pu = z * miles / z_base
        y_sh = 1j * b * 1e-6 * miles / 2.0 * z_base
        return {"from": f, "to": t, "y_series": cmat(np.linalg.inv(z_pu)),
                "y_shunt_from": cmat(y_sh), "y_shunt_to": cmat(y_sh)}

    def kw(p, q):
        return -complex(p, q) / s_phase

    # Regulator 650-632 is represented by a boosted source voltage.
    v0 = [rect(1.0625, 0.0), rect(1.05, -120.0), rect(1.06875, 120.0)]
    nodes = [{"id": "650", "kind": "slack", "phases": "abc", "v_slack": [cpair(v) for v in v0]}]

    def pq(node, phases, zip_=None):
        entry = {"id": node, "kind": "pq", "phases": phases}
        if zip_ is not None:
            entry["zip"] = zip_
        nodes.append(entry)

    # Distributed load on 632-671 split evenly to both ends.
    dist = [kw(17 / 2, 10 / 2), kw(66 / 2, 38 / 2), kw(117 / 2, 68 / 2)]
    pq("632", "abc", zip_block(0.0, 0.0, 1.0, dist))
    pq("633", "abc")
    pq("634", "abc", zip_block(0.0, 0.0, 1.0, [kw(160, 110), kw(120, 90), kw(120, 90)]))
    pq("645", "bc", zip_block(0.0, 0.0, 1.0, [kw(170, 125), 0j]))
    pq("646", "bc", zip_block(1.0, 0.0, 0.0, [kw(115, 66), kw(115, 66)]))
    pq("671", "abc", zip_block(0.3, 0.3, 0.4,
                               [kw(385, 220) + d for d in dist]))
    pq("680", "abc")
    pq("684", "ac")
    pq("611", "c", zip_block(0.0, 1.0, 0.0, [kw(170, 80)]))
    pq("652", "a", zip_block(1.0, 0.0, 0.0, [kw(128, 86)]))
    pq("692", "abc", zip_block(0.0, 1.0, 0.0, [0j, 0j, kw(170, 151)]))
    pq("675", "abc", zip_block(0.0, 0.0, 1.0, [kw(485, 190), kw(68, 60), kw(290, 212)]))

    xfm_z = complex(0.011, 0.02) * (base_mva / 0.5)
    branches = [
        line("650", "632", "601", 2000),
        line("632", "633", "602", 500),
        {"from": "633", "to": "634", "y_series": cmat(np.eye(3) / xfm_z)},
        line("632", "645", "603", 500),
        line("645", "646", "603", 300),
        line("632", "671", "601", 2000),
        line("671", "680", "601", 1000),
        line("671", "684", "604", 300),
        line("684", "611", "605", 300),
        line("684", "652", "607", 800),
        line("671", "692", "601", 50),
        line("692", "675", "606", 500),
    ]
    return {"base_mva": base_mva, "nodes": nodes, "branches": branches}


def bus5():
    # Balanced high-voltage feeder modeled single-phase; node 1 is the PCC.
    base = 10.0
    z = {("1", "2"): complex(0.004, 0.012), ("2", "3"): complex(0.006, 0.015),
         ("3", "4"): complex(0.008, 0.018), ("2", "5"): complex(0.005, 0.014)}
    nodes = [
        {"id": "1", "kind": "slack", "phases": "a"},
        {"id": "2", "kind": "pq", "phases": "a",
         "zip": zip_block(0.0, 0.0, 1.0, [-complex(1.0, 0.3) / base])},
        {"id": "3", "kind": "pq", "phases": "a",
         "zip": zip_block(0.0, 0.0, 1.0, [-complex(3.0, 1.0) / base])},
        {"id": "4", "kind": "pq", "phases": "a",
         "zip": zip_block(0.0, 0.0, 1.0, [-complex(2.0, 0.8) / base])},
        {"id": "5", "kind": "pq", "phases": "a",
         "zip": zip_block(0.0, 0.0, 1.0, [complex(4.0, 1.0) / base])},
    ]
    branches = [{"from": f, "to": t, "y_series": cmat(1.0 / zz)} for (f, t), zz in z.items()]
    return {"base_mva": base, "nodes": nodes, "branches": branches}


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    write("two_bus.json", two_bus())
    write("chain3.json", chain3())
    write("feeder22.json", feeder22())
    write("ieee13_zip.json", ieee13())
    write("bus5.json", bus5())

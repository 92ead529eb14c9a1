"""Regenerate the synthetic topologies and traffic matrices in src/mlwdm/data.

Both topologies have 10 nodes and 17 bidirectional fiber spans (34 directed
links). Coordinates, names and demands are synthetic.
"""

import json
from pathlib import Path

import numpy as np

from mlwdm.traffic import matrix_from_arrays, write_traffic

DATA = Path(__file__).resolve().parents[1] / "src" / "mlwdm" / "data"

TOPOLOGIES = {
    "topology1": {
        "coords": [(0, 0), (420, 90), (860, 40), (1250, 210), (160, 480),
                   (610, 420), (1040, 560), (300, 900), (760, 860), (1210, 930)],
        "tz": [0, 0, 0, 1, 0, 0, 1, 0, 1, 1],
        "spans": [(0, 1), (1, 2), (2, 3), (0, 4), (1, 5), (2, 6), (3, 6), (4, 5), (5, 6),
                  (4, 7), (5, 8), (6, 9), (7, 8), (8, 9), (1, 4), (2, 5), (5, 9)],
    },
    "topology2": {
        "coords": [(0, 300), (380, 0), (390, 640), (900, 180), (880, 760),
                   (1400, 20), (1420, 520), (1900, 300), (1960, 880), (2400, 560)],
        "tz": [-1, -1, 0, 0, 0, 1, 1, 1, 2, 2],
        "spans": [(0, 1), (0, 2), (1, 2), (1, 3), (2, 4), (3, 4), (3, 5), (4, 6), (5, 6),
                  (5, 7), (6, 7), (6, 8), (7, 9), (8, 9), (4, 8), (3, 6), (7, 8)],
    },
}

POPULATION = [820_000, 410_000, 1_250_000, 300_000, 640_000, 2_100_000, 520_000, 370_000, 950_000, 700_000]


def topology_doc(name, layout, wavelengths=4, transceivers=4):
    nodes = [
        {"id": i, "name": f"{name}-n{i}", "x_km": float(x), "y_km": float(y), "population": POPULATION[i],
         "type": "core" if POPULATION[i] >= 800_000 else "edge", "timezone_offset_h": layout["tz"][i]}
        for i, (x, y) in enumerate(layout["coords"])
    ]
    links = []
    for a, b in layout["spans"]:
        for s, d in ((a, b), (b, a)):
            links.append({"id": len(links), "src": s, "dst": d, "num_wavelengths": wavelengths})
    return {
        "synthetic": True,
        "nodes": nodes,
        "links": links,
        "max_transmitters": [transceivers] * 10,
        "max_receivers": [transceivers] * 10,
        "lightpath_capacity_gbps": 10.0,
    }


def traffic(seed, scale):
    rng = np.random.default_rng(seed)
    pop = np.array(POPULATION, float) / 1e6
    gravity = np.outer(pop, pop)
    demand = scale * gravity * rng.uniform(0.5, 1.5, size=(10, 10))
    np.fill_diagonal(demand, 0.0)
    demand = np.round(demand, 3)
    tags = rng.choice(["audio-unitary", "audio-aggregated", "video"], size=(10, 10), p=[0.2, 0.4, 0.4]).tolist()
    for i in range(10):
        tags[i][i] = None
    doc = json.loads((DATA / "models_default.json").read_text())
    doc["tags"] = tags
    return matrix_from_arrays(demand, doc)


def main():
    for i, (name, layout) in enumerate(TOPOLOGIES.items(), start=1):
        (DATA / f"{name}.json").write_text(json.dumps(topology_doc(name, layout), indent=2) + "\n")
        write_traffic(traffic(100 + i, scale=2.0), DATA / f"traffic{i}.csv", extra={"synthetic": True})


if __name__ == "__main__":
    main()

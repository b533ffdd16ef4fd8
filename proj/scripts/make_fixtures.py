#!/usr/bin/env python3
"""Generate the synthetic feeders under data/.

All networks are invented. Profiles come from a seeded RNG, so rerunning the
script reproduces the files byte for byte.
"""

import csv
import json
import math
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parent.parent / "data"
T = 24

# Per-km sequence impedances (ohm/km) of two typical LV cables.
CABLE_MAIN = {"z1": {"r": 0.206, "x": 0.080}, "z0": {"r": 0.825, "x": 0.320}}
CABLE_SERVICE = {"z1": {"r": 0.443, "x": 0.085}, "z0": {"r": 1.770, "x": 0.340}}


def base(periods=T):
    return {"s_kva": 100.0, "v_volts": 230.0, "periods": periods, "period_hours": 1.0}


def transformer(to_bus, kva, z_pct=4.0, xr=4.0):
    # Balanced Dyn11 style: equal sequence impedances seen from LV.
    zb = 230.0**2 / (kva / 3 * 1000.0)
    z = z_pct / 100 * zb
    r = z / math.sqrt(1 + xr * xr)
    x = r * xr
    diag = lambda v: [v, 0, 0, 0, v, 0, 0, 0, v]
    return {
        "id": "tx",
        "from_bus": "mv",
        "to_bus": to_bus,
        "r_matrix": diag(round(r, 6)),
        "x_matrix": diag(round(x, 6)),
        "i_max": round(kva * 1000 / 3 / 230, 3),
    }


def cable(bid, a, b, km, i_max, kind=CABLE_MAIN):
    return {"id": bid, "from_bus": a, "to_bus": b, "length_km": km, "i_max": i_max, **kind}


def residential(rng, peak_kw):
    """Hourly household demand with morning and evening peaks, kW per phase."""
    h = np.arange(T)
    shape = 0.25 + 0.35 * np.exp(-((h - 8) ** 2) / 6.0) + 0.9 * np.exp(-((h - 19) ** 2) / 5.0)
    shape = shape / shape.max()
    noise = rng.uniform(0.85, 1.15, size=T)
    return [round(float(v), 4) for v in peak_kw * shape * noise]


def reactive(p, pf=0.95):
    k = math.tan(math.acos(pf))
    return [round(v * k, 4) for v in p]


def write_json(name, doc):
    (OUT / name).write_text(json.dumps(doc, indent=1) + "\n")


def synth4(rng):
    buses = [
        {"id": "mv", "is_slack": True, "v_ref": 1.0},
        {"id": "lv", "vmin": 0.9, "vmax": 1.1, "vuf_max": 0.02},
        {"id": "n1", "vmin": 0.9, "vmax": 1.1, "vuf_max": 0.02},
        {"id": "n2", "vmin": 0.9, "vmax": 1.1, "vuf_max": 0.02},
    ]
    branches = [
        transformer("lv", 250.0),
        cable("c1", "lv", "n1", 0.12, 120.0),
        cable("c2", "n1", "n2", 0.10, 90.0),
    ]
    loads = [
        {"id": "h1", "bus": "n1", "phase": "a"},
        {"id": "h2", "bus": "n1", "phase": "b"},
        {"id": "h3", "bus": "n2", "phase": "c"},
        {"id": "h4", "bus": "n2", "phase": "abc"},
    ]
    gens = [
        {"id": "pv1", "bus": "n1", "phase": "a", "p_cap_gridcode": 5.0, "q_abs_max": 3.0},
        {"id": "pv2", "bus": "n1", "phase": "b", "p_cap_gridcode": 5.0, "q_abs_max": 3.0},
        {"id": "pv3", "bus": "n2", "phase": "c", "p_cap_gridcode": 5.0, "q_abs_max": 3.0},
        {"id": "pv4", "bus": "n2", "phase": "a", "p_cap_gridcode": 5.0, "q_abs_max": 3.0},
    ]
    write_json("synth4.json", {"name": "synth4 (synthetic)", "base": base(), "buses": buses,
                               "branches": branches, "loads": loads, "generators": gens})
    with open(OUT / "synth4_loads.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["element_id", "phase", "period", "p_kw", "q_kvar"])
        for ld, peak in (("h1", 2.5), ("h2", 3.0), ("h3", 2.0)):
            p = residential(rng, peak)
            q = reactive(p)
            phase = next(l["phase"] for l in loads if l["id"] == ld)
            for t in range(T):
                w.writerow([ld, phase, t, f"{p[t]:.4f}", f"{q[t]:.4f}"])
        for ph in "abc":
            p = residential(rng, 1.5)
            q = reactive(p)
            for t in range(T):
                w.writerow(["h4", ph, t, f"{p[t]:.4f}", f"{q[t]:.4f}"])


def two_bus():
    # Equal sequence impedances decouple the phases: one-phase closed form applies.
    line = {"z1": {"r": 0.5, "x": 0.2}, "z0": {"r": 0.5, "x": 0.2}}
    doc = {
        "name": "two_bus (synthetic)",
        "base": base(1),
        "buses": [
            {"id": "mv", "is_slack": True, "v_ref": 1.0},
            {"id": "n1", "vmin": 0.9, "vmax": 1.1, "vuf_max": 0.02},
        ],
        "branches": [cable("l1", "mv", "n1", 0.4, 80.0, line)],
        "loads": [],
        "generators": [{"id": "pv", "bus": "n1", "phase": "a", "p_cap_gridcode": 5.0, "q_abs_max": 0.0}],
    }
    write_json("two_bus.json", doc)


def phase_a(rng):
    buses = [{"id": "mv", "is_slack": True, "v_ref": 1.0}]
    names = ["lv", "p1", "p2", "p3", "p4", "p5"]
    for n in names:
        buses.append({"id": n, "vmin": 0.94, "vmax": 1.1, "vuf_max": 0.02})
    branches = [transformer("lv", 1000.0)]
    prev = "lv"
    for k, n in enumerate(names[1:], start=1):
        branches.append(cable(f"c{k}", prev, n, 0.06, 1000.0))
        prev = n
    loads, gens = [], []
    for k, n in enumerate(names[1:], start=1):
        p = residential(rng, 1.2)
        loads.append({"id": f"h{k}", "bus": n, "phase": "abc", "p_kw": p, "q_kvar": reactive(p)})
        gens.append({"id": f"pv{k}", "bus": n, "phase": "a", "p_cap_gridcode": 5.0, "q_abs_max": 0.0})
    write_json("phase_a.json", {"name": "phase_a (synthetic)", "base": base(), "buses": buses,
                                "branches": branches, "loads": loads, "generators": gens})


def feeder(name, rng, n_buses, n_gens, cap, vmin, kva):
    """Radial trunk with short laterals; single-phase DGs spread over phases."""
    buses = [{"id": "mv", "is_slack": True, "v_ref": 1.0}, {"id": "lv", "vmin": vmin, "vmax": 1.1}]
    branches = [transformer("lv", kva)]
    trunk = ["lv"]
    customer_buses = []
    k = 1
    while len(buses) < n_buses:
        bid = f"b{k}"
        parent = trunk[-1] if k % 3 else trunk[max(0, len(trunk) - 2)]
        buses.append({"id": bid, "vmin": vmin, "vmax": 1.1})
        if k % 3:
            branches.append(cable(f"c{k}", parent, bid, 0.05, 250.0))
            trunk.append(bid)
        else:
            branches.append(cable(f"c{k}", parent, bid, 0.03, 120.0, CABLE_SERVICE))
        customer_buses.append(bid)
        k += 1
    loads, gens = [], []
    for i, bid in enumerate(customer_buses):
        p = residential(rng, 1.0 + rng.uniform(0.0, 1.0))
        loads.append({"id": f"h{i + 1}", "bus": bid, "phase": "abc", "p_kw": p, "q_kvar": reactive(p)})
    for g in range(n_gens):
        bid = customer_buses[g % len(customer_buses)]
        gens.append({"id": f"pv{g + 1}", "bus": bid, "phase": "abc"[g % 3], "p_cap_gridcode": cap,
                     "q_abs_max": round(cap * 0.6, 3)})
    write_json(f"{name}.json", {"name": f"{name} (synthetic)", "base": base(), "buses": buses,
                                "branches": branches, "loads": loads, "generators": gens})


def main():
    OUT.mkdir(exist_ok=True)
    rng = np.random.default_rng(20240611)
    synth4(rng)
    two_bus()
    phase_a(rng)
    feeder("croatian_style", rng, 20, 43, 3.68, 0.9, 400.0)
    feeder("australian_style", rng, 20, 63, 5.0, 0.94, 500.0)


if __name__ == "__main__":
    main()

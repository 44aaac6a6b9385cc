#!/usr/bin/env python3
"""Regenerates data/desk5: five nodes, one week at hourly resolution.

Two regions: N1, N2 (windy north) and S1, S2, S3 (sunny south). Costs are
overnight costs scaled to a one-week slice of the year, so capacities come out
in a realistic range. Output is deterministic.
"""
import math
import random
import sys
from pathlib import Path

T = 168
WEEK = 7.0 / 365.0

NODES = [
    # id, mean demand MW, mean wind cf, solar peak cf
    ("N1", 90.0, 0.46, 0.35),
    ("N2", 160.0, 0.36, 0.40),
    ("S1", 280.0, 0.26, 0.70),
    ("S2", 240.0, 0.22, 0.78),
    ("S3", 200.0, 0.24, 0.74),
]

LINES = [
    # id, from, to, length km, existing MW
    ("N1N2", "N1", "N2", 350.0, 60.0),
    ("N2S1", "N2", "S1", 500.0, 80.0),
    ("S1S2", "S1", "S2", 400.0, 80.0),
    ("S2S3", "S2", "S3", 300.0, 80.0),
    ("S3N1", "S3", "N1", 650.0, 40.0),
    ("N2S2", "N2", "S2", 550.0, 50.0),
]

NON_RES_PERCENT = {"N1": 25.4, "N2": 41.0, "S1": 52.5, "S2": 60.3, "S3": 67.6}
REGIONS = {"N1": "north", "N2": "north", "S1": "south", "S2": "south", "S3": "south"}


def fmt(v):
    return f"{v:.6g}"


def wind_series(rng, mean):
    x, out = 0.0, []
    for _ in range(T):
        x = 0.92 * x + rng.gauss(0.0, 0.35)
        out.append(min(1.0, max(0.0, mean * math.exp(0.6 * x - 0.18))))
    return out


def solar_series(rng, peak):
    out = []
    for t in range(T):
        hour = t % 24
        clouds = 0.55 + 0.45 * rng.random()
        shape = max(0.0, math.sin(math.pi * (hour - 6) / 12.0)) if 6 <= hour <= 18 else 0.0
        out.append(min(1.0, peak * shape * clouds))
    return out


def demand_series(rng, mean):
    out = []
    for t in range(T):
        hour, day = t % 24, t // 24
        daily = 1.0 + 0.18 * math.sin(math.pi * (hour - 8) / 12.0)
        weekend = 0.9 if day >= 5 else 1.0
        out.append(mean * daily * weekend * (1.0 + 0.03 * rng.gauss(0.0, 1.0)))
    return out


def main(out_dir):
    rng = random.Random(20240501)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    (out / "scenario.cfg").write_text(
        "timesteps=%d\ncarbon_cap=inf\ncarbon_cap_mode=upper\nslack_node=S1\nstep_hours=1\n" % T)

    techs = [
        # id, kind, capex/MW, capex/MWh, vom, lifetime, rate, emission, eta_in, eta_out
        ("wind", "generation", 1.3e6 * WEEK, "", 0.0, 25, 0.05, 0.0, "", ""),
        ("solar", "generation", 0.6e6 * WEEK, "", 0.0, 25, 0.05, 0.0, "", ""),
        ("gas", "generation", 0.8e6 * WEEK, "", 60.0, 30, 0.05, 0.37, "", ""),
        ("battery", "storage", 0.15e6 * WEEK, 0.25e6 * WEEK, 0.0, 15, 0.05, 0.0, 0.95, 0.95),
    ]
    rows = ["id,kind,capex_conversion,capex_storage,vom,lifetime,discount_rate,emission_rate,charge_eff,discharge_eff"]
    for t in techs:
        rows.append(",".join(fmt(v) if isinstance(v, float) else str(v) for v in t))
    (out / "technologies.csv").write_text("\n".join(rows) + "\n")

    rows = ["id,bilateral_share,slack"]
    for node in NODES:
        rows.append(f"{node[0]},0.7,{1 if node[0] == 'S1' else 0}")
    (out / "nodes.csv").write_text("\n".join(rows) + "\n")

    demand = {n[0]: demand_series(rng, n[1]) for n in NODES}
    rows = [",".join(n[0] for n in NODES)]
    for t in range(T):
        rows.append(",".join(fmt(demand[n[0]][t]) for n in NODES))
    (out / "demand.csv").write_text("\n".join(rows) + "\n")

    cf = {}
    for node in NODES:
        cf[f"{node[0]}:wind"] = wind_series(rng, node[2])
        cf[f"{node[0]}:solar"] = solar_series(rng, node[3])
    keys = list(cf)
    rows = ["t," + ",".join(keys)]
    for t in range(T):
        rows.append(str(t) + "," + ",".join(fmt(cf[k][t]) for k in keys))
    (out / "capacity_factors.csv").write_text("\n".join(rows) + "\n")

    rows = ["node,technology,mw,mwh"]
    for node in NODES:
        rows.append(f"{node[0]},gas,{fmt(0.3 * node[1])},0")
    (out / "existing_capacity.csv").write_text("\n".join(rows) + "\n")

    rows = ["id,from,to,length_km,capex_per_mw_km,lifetime,discount_rate,existing_capacity,reactance"]
    for lid, a, b, km, mw in LINES:
        rows.append(f"{lid},{a},{b},{fmt(km)},{fmt(1000.0 * WEEK)},40,0.05,{fmt(mw)},{fmt(km / 1000.0)}")
    (out / "lines.csv").write_text("\n".join(rows) + "\n")

    (out / "preferences.csv").write_text("from,to,coefficient\n")

    # Study inputs.
    (out / "non_green_index.csv").write_text(
        "node,non_res_percent\n" + "".join(f"{n},{fmt(v)}\n" for n, v in NON_RES_PERCENT.items()))
    (out / "regions.csv").write_text("node,region\n" + "".join(f"{n},{r}\n" for n, r in REGIONS.items()))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else str(Path(__file__).resolve().parent.parent / "data" / "desk5"))

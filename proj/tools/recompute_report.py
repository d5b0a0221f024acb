#!/usr/bin/env python3
"""Recompute the metric section of a run report from its CSV logs.

Usage: recompute_report.py <run-dir>

Exits 0 when every recomputed metric equals the one in report.json, 1 otherwise.
"""
import csv
import json
import math
import sys
from collections import Counter, defaultdict
from pathlib import Path


def read_config(path):
    sections = defaultdict(dict)
    section = None
    for raw in path.read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            section = line[1:-1].strip()
            continue
        key, _, value = line.partition("=")
        sections[section][key.strip()] = value.strip()
    return sections


def rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def fraction(num, den):
    return None if den == 0 else num / den


def nearest_rank(values, pct):
    if not values:
        return 0
    rank = max(1, math.ceil(pct * len(values) / 100))
    return values[rank - 1]


def recompute(run):
    cfg = read_config(run / "config.cfg")
    horizon = int(cfg["scenario"]["horizon"])
    gossip = int(cfg["topology"]["gossip_interval"])
    node_count = sum(int(v) for k, v in cfg["population"].items() if k.endswith(".count"))

    out = {
        "scenario": cfg["scenario"]["name"],
        "mode": cfg["scenario"]["mode"],
        "seed": int(cfg["scenario"]["seed"]),
        "horizon": horizon,
    }

    requests = rows(run / "requests.csv")
    outcomes = Counter({k: 0 for k in ["completed", "terminated", "insufficient_funds", "unreachable",
                                       "host_lost", "dropped", "unfinished"]})
    latency = []
    consumed = 0
    for r in requests:
        outcomes[r["outcome"]] += 1
        if r["outcome"] == "completed":
            latency.append(int(r["finished_at"]) - int(r["issued_at"]))
        if r["outcome"] in ("completed", "terminated"):
            consumed += int(r["consumed_compute"])
    req = dict(outcomes)
    req["total"] = len(requests)
    out["requests"] = req
    out["availability"] = fraction(outcomes["completed"], len(requests) - outcomes["dropped"])
    latency.sort()
    out["latency"] = {f"p{p}": nearest_rank(latency, p) for p in (50, 95, 99)}
    out["currency_velocity"] = len(rows(run / "transfers.csv")) * 1e6 / horizon

    rate = {n["id"]: int(n["compute"]) for n in rows(run / "nodes.csv") if n["serves"] == "1"}
    since = {}
    capacity_time = 0
    for m in rows(run / "membership.csv"):
        if m["node"] not in rate:
            continue
        if m["event"] == "join":
            since[m["node"]] = int(m["at"])
        elif m["node"] in since:
            capacity_time += rate[m["node"]] * (int(m["at"]) - since.pop(m["node"]))
    for node, t in since.items():
        capacity_time += rate[node] * (horizon - t)
    out["utilisation"] = 0.0 if capacity_time == 0 else consumed / capacity_time

    down = Counter()
    for s in rows(run / "service_status.csv"):
        down[s["at"]] += 0 if s["available"] == "1" else 1
    out["cascade_size"] = max(down.values(), default=0)

    out["placement_shortfalls"] = sum(1 for p in rows(run / "placements.csv") if p["action"] == "shortfall")

    conv = rows(run / "convergence.csv")
    lag = rounds = unagreed = 0
    for c in conv:
        if not c["agreed_at"]:
            unagreed += 1
            continue
        agreed = int(c["agreed_at"])
        lag = max(lag, agreed - int(c["at"]))
        rounds = max(rounds, agreed // gossip - int(c["quiesced_at"]) // gossip)
    out["convergence_lag"] = lag
    out["convergence"] = {"writes": len(conv), "unagreed": unagreed, "max_rounds_after_quiescence": rounds}

    windows = []
    kills = sorted((k for k in cfg["failures"] if k.startswith("kill.")), key=lambda k: int(k.split(".")[1]))
    for k in kills:
        target, at, until = cfg["failures"][k].split()
        at, until = int(at), int(until)
        inside = [r for r in requests if at <= int(r["issued_at"]) < until and r["outcome"] != "dropped"]
        ok = sum(1 for r in inside if r["outcome"] == "completed")
        windows.append({"target": target, "at": at, "until": until, "requests": len(inside),
                        "availability": fraction(ok, len(inside))})
    out["windows"] = windows

    sessions = rows(run / "sessions.csv")
    sc = Counter({k: 0 for k in ["completed", "failed", "dropped", "open"]})
    for s in sessions:
        sc[s["outcome"]] += 1
    sj = dict(sc)
    sj["started"] = len(sessions)
    out["sessions"] = sj

    holders = Counter()
    for k, v in cfg["services"].items():
        if k.endswith(".version"):
            holders[v] += node_count
    full_at = {}
    for a in rows(run / "adoptions.csv"):
        if a["from_version"]:
            holders[a["from_version"]] -= 1
        holders[a["to_version"]] += 1
        if holders[a["to_version"]] == node_count and a["to_version"] not in full_at:
            full_at[a["to_version"]] = int(a["at"])
    evo = {}
    releases = sorted((k for k in cfg["evolution"] if k.startswith("release.")), key=lambda k: int(k.split(".")[1]))
    for k in releases:
        version = cfg["evolution"][k].split()[1]
        evo[version] = {"adopted": fraction(holders[version], node_count), "full_adoption_at": full_at.get(version)}
    out["evolution"] = evo
    return out


def main():
    if len(sys.argv) != 2:
        print(__doc__.strip(), file=sys.stderr)
        return 2
    run = Path(sys.argv[1])
    report = json.loads((run / "report.json").read_text())
    mismatches = 0
    for key, value in recompute(run).items():
        if report.get(key) != value:
            mismatches += 1
            print(f"MISMATCH {key}: report={report.get(key)!r} logs={value!r}")
    print(f"{'OK' if mismatches == 0 else 'FAILED'}: {mismatches} mismatching metrics")
    return 0 if mismatches == 0 else 1


if __name__ == "__main__":
    sys.exit(main())

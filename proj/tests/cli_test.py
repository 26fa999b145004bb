"""End-to-end checks of the command-line tool.

usage: cli_test.py <cli executable> <verify report schema> <work dir>
"""

import csv
import json
import shutil
import subprocess
import sys
from pathlib import Path

import jsonschema

CLI, SCHEMA, WORK = sys.argv[1], Path(sys.argv[2]), Path(sys.argv[3])
failures = []


def run(*args, expect=0):
    p = subprocess.run([CLI, *map(str, args)], capture_output=True, text=True)
    if p.returncode != expect:
        failures.append(f"{' '.join(map(str, args))}: exit {p.returncode}, wanted {expect}\n{p.stderr}")
    return p


def check(cond, what):
    if not cond:
        failures.append(what)


def columns(path):
    with open(path) as f:
        return [list(map(float, line.split())) for line in f if line.strip()]


shutil.rmtree(WORK, ignore_errors=True)
WORK.mkdir(parents=True)

# catalog
p = run("list-scenarios")
for name in ("ex61-l0", "ex61-l-1", "ex62", "heat", "bistable"):
    check(name in p.stdout, f"list-scenarios misses {name}")
p = run("list-scenarios", "--json")
catalog = json.loads(p.stdout)
check(len(catalog) == 5, "list-scenarios --json should print five scenarios")

# simulate writes the trajectory and echoes the configuration
sim = WORK / "sim"
run("simulate", "--scenario", "ex61-l0", "--t-end", 64, "--out", sim)
check((sim / "trajectory.csv").is_file(), "simulate wrote no trajectory.csv")
meta = json.loads((sim / "metadata.json").read_text())
check(meta["run_config"]["scenario"] == "ex61-l0", "metadata scenario")
check(meta["run_config"]["overrides"]["t_end"] == 64, "metadata t_end")
check(meta["scenario"]["name"] == "ex61-l0", "metadata resolved scenario")
first = (sim / "trajectory.csv").read_bytes()
run("simulate", "--scenario", "ex61-l0", "--t-end", 64, "--out", sim)
check((sim / "trajectory.csv").read_bytes() == first, "simulate is not byte-reproducible")

# grid overrides from the command line and from a config file
grid = WORK / "grid"
run("simulate", "--scenario", "heat", "--t-end", 1, "--n", 32, "--dt", 2e-3, "--out", grid)
meta = json.loads((grid / "metadata.json").read_text())
check(meta["run_config"]["overrides"]["n"] == 32, "--n not echoed")
check(meta["run_config"]["overrides"]["dt"] == 2e-3, "--dt not echoed")
check(meta["scenario"]["config"]["n"] == 32, "--n not applied")
with open(grid / "trajectory.csv") as f:
    header = next(csv.reader(f))
check(len(header) == 33, "trajectory header should have t plus 32 grid values")

cfg_file = WORK / "run.json"
cfg_file.write_text(json.dumps({"scenario": "heat", "overrides": {"t_end": 0.5, "n": 16}, "out": str(WORK / "cfg")}))
run("simulate", "--config", cfg_file)
meta = json.loads((WORK / "cfg" / "metadata.json").read_text())
check(meta["scenario"]["config"]["n"] == 16, "config file override not applied")
bad_cfg = WORK / "bad.json"
bad_cfg.write_text(json.dumps({"scenaro": "heat"}))
run("simulate", "--config", bad_cfg, expect=2)

# plots: the field has one column per grid point plus time; the section at
# pi/2 of the sin x profile is the grid value at index n/4
inh = WORK / "inh"
run("simulate", "--scenario", "ex61-l-1", "--t-end", 10, "--n", 32, "--dt", 1e-3, "--stride", 100, "--out", inh)
run("export-plot", "--input", inh / "trajectory.csv", "--kind", "field", "--out", inh / "field.dat")
field = columns(inh / "field.dat")
check(all(len(r) == 33 for r in field), "field plot should have N+1 columns")
run("export-plot", "--input", inh / "trajectory.csv", "--kind", "section", "--out", inh / "section.dat")
section = columns(inh / "section.dat")
with open(inh / "trajectory.csv") as f:
    rows = [list(map(float, r)) for r in list(csv.reader(f))[1:]]
check(len(section) == len(rows), "section plot length")
for s, r in zip(section, rows):
    check(abs(s[0] - r[0]) < 1e-12, "section time column")
    check(abs(s[1] - r[1 + 8]) <= 1e-6 * max(1.0, abs(r[9])), f"section value at t={r[0]}")
check(abs(section[0][1] - 1.0) < 1e-12, "section starts at psi(0) = 1")
check(all(s[1] > 0 for s in section), "psi stays positive")

# lap number along a pair of solutions never increases
lap = WORK / "lap"
run("simulate", "--scenario", "bistable", "--t-end", 20, "--n", 32, "--dt", 0.01, "--stride", 10,
    "--random-initial", "--seed", 3, "--lap-pair", "--out", lap)
drops = json.loads((lap / "lap_drops.json").read_text())
check(drops["increases"] == [], "lap number increased")
check(all(d["after"] < d["before"] for d in drops["drops"]), "drops must decrease the count")
run("export-plot", "--input", lap / "lap.csv", "--kind", "lap", "--out", lap / "lap.dat")
counts = [r[1] for r in columns(lap / "lap.dat")]
check(all(b <= a for a, b in zip(counts, counts[1:])), "lap plot not non-increasing")
check(all(c % 2 == 0 for c in counts), "lap counts must be even")

# spectrum and omega on the cheap plumbing scenarios
spec = WORK / "spec"
run("spectrum", "--scenario", "heat", "--plots", "--out", spec)
sj = json.loads((spec / "spectrum.json").read_text())
check(sj["within_tolerance"] and sj["mismatches"] == [], "heat spectrum should match -k^2")
check(sj["crosscheck"] is not None and sj["crosscheck"]["max_discrepancy"] < 1e-6, "heat Floquet cross-check")
run("export-plot", "--input", spec / "spectrum.json", "--kind", "convergence", "--out", spec / "conv.dat")
conv = columns(spec / "conv.dat")
check(conv and all(len(r) == 1 + sj["m"] for r in conv), "convergence plot columns")
om = WORK / "omega"
run("omega", "--scenario", "bistable", "--save-trajectory", "--out", om)
oj = json.loads((om / "omega.json").read_text())
check(oj["minimal_set_count"] == 1 and oj["homogeneous"], "bistable omega limit")
check(oj["implication"]["rule"] == "a" and oj["implication"]["passed"], "bistable implication")
check((om / "omega_trajectory.csv").is_file(), "omega trajectory saved")

# verify writes a report that matches the schema
schema = json.loads(SCHEMA.read_text())
ver = WORK / "verify"
p = run("verify", "--only", "AC02,AC12", "--out", ver)
report = json.loads((ver / "verify_report.json").read_text())
jsonschema.validate(report, schema)
check([c["id"] for c in report["checks"]] == ["AC02", "AC12"], "verify --only order")
check(report["summary"]["pass"] == 2, "AC02 and AC12 should pass")
check("AC02" in p.stdout, "summary printed")

# a sign-flipped diffusion is caught
bad = WORK / "bad"
run("verify", "--only", "AC01", "--diffusion", -1, "--out", bad, expect=1)
report = json.loads((bad / "verify_report.json").read_text())
jsonschema.validate(report, schema)
check(report["checks"][0]["status"] == "fail", "AC01 should fail with D = -1")
check(report["diffusion_override"] == -1, "diffusion override recorded")

# usage errors
run("simulate", "--scenario", "no-such-thing", "--out", WORK / "x", expect=2)
run("verify", "--quick", "--full", expect=2)
run("export-plot", "--input", inh / "trajectory.csv", "--kind", "pie", expect=2)

if failures:
    print("\n".join(failures))
    sys.exit(1)
print("cli ok")

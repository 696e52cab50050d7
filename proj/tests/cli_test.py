"""End-to-end checks of the cmjlab command-line tool.

usage: cli_test.py <cmjlab-binary> <schema.json> [--full]
"""
import hashlib
import json
import os
import subprocess
import sys
import tempfile

import jsonschema

BIN = sys.argv[1]
SCHEMA = json.load(open(sys.argv[2]))
FULL = "--full" in sys.argv[3:]
failures = []


def run(*args, env=None, cwd=None):
    e = dict(os.environ)
    e.pop("CMJLAB_OUT", None)
    if env:
        e.update(env)
    return subprocess.run([BIN, *args], capture_output=True, text=True, env=e, cwd=cwd)


def check(name, cond, info=""):
    print(("ok   " if cond else "FAIL ") + name + (f"  [{info}]" if info and not cond else ""))
    if not cond:
        failures.append(name)


r = run("covariance", "--k", "2", "--l", "3", "--s", "1", "--u", "1")
check("covariance prints 0.25", r.returncode == 0 and r.stdout.strip() == "0.25", r.stdout + r.stderr)

r = run("gen-tree", "--n", "1", "--seed", "7")
check("gen-tree n=1 is the single edge", r.returncode == 0 and r.stdout == "vertex,parent\n1,0\n", r.stdout)

r = run("gen-tree", "--n", "50", "--seed", "3", "--workers", "4")
rows = r.stdout.strip().split("\n")
check("gen-tree n=50 has 50 edges", r.returncode == 0 and len(rows) == 51 and rows[0] == "vertex,parent")
check("gen-tree parents precede children",
      all(int(p) < int(v) for v, p in (row.split(",") for row in rows[1:])))
check("gen-tree is seed deterministic", run("gen-tree", "--n", "50", "--seed", "3").stdout == r.stdout)

for bad in (["bogus"], [], ["gen-tree"], ["gen-tree", "--n", "x"], ["gen-tree", "--n", "3", "--nope"],
            ["cmj", "--dist", "weibull(1)"], ["renewal-table", "--dist", "det(1)", "--h", "0.3"],
            ["covariance", "--k", "0"], ["--workers", "0", "gen-tree", "--n", "1"],
            ["--config", "/nonexistent.json", "gen-tree", "--n", "1"]):
    r = run(*bad)
    check(f"usage error exits 2: {' '.join(bad) or '(none)'}", r.returncode == 2 and r.stderr != "",
          f"rc={r.returncode}")

r = run("--help")
check("help exits 0", r.returncode == 0 and "verify" in r.stdout)

with tempfile.TemporaryDirectory() as tmp:
    cfg = os.path.join(tmp, "run.json")
    with open(cfg, "w") as f:
        json.dump({"seed": 7, "gen-tree": {"n": 4}}, f)
    a = run("--config", cfg, "gen-tree")
    b = run("gen-tree", "--n", "4", "--seed", "7")
    check("config file supplies options", a.returncode == 0 and a.stdout == b.stdout, a.stderr)
    c = run("--config", cfg, "gen-tree", "--n", "2")
    check("flags override the config file", c.stdout == run("gen-tree", "--n", "2", "--seed", "7").stdout)

    out = os.path.join(tmp, "flag")
    r = run("--out", out, "renewal-table", "--dist", "gamma(2,2)", "--t", "1", "--h", "0.1", "--k-max", "3")
    check("--out writes the table", r.returncode == 0 and os.path.exists(os.path.join(out, "renewal_table.csv")))
    head = open(os.path.join(out, "renewal_table.csv")).readline().strip()
    check("renewal table header", head == "t,U,U2,U3", head)
    check("no temp files left", not any(n.endswith(".tmp") for n in os.listdir(out)))

    envdir = os.path.join(tmp, "env")
    r = run("cmj", "--dist", "exp(1)", "--t", "5", "--seed", "2", env={"CMJLAB_OUT": envdir})
    check("env var sets the output dir", r.returncode == 0 and r.stdout == ""
          and open(os.path.join(envdir, "trajectory.csv")).readline() == "time,generation,ancestor1\n")

    r = run("cmj", "--embedded", "5")
    check("embedded tree csv", r.returncode == 0 and r.stdout.startswith("vertex,parent,birth_time\n")
          and len(r.stdout.strip().split("\n")) == 6)

    r = run("profile-path", "--n", "100", "--grid", "0,0.5,1", "--k-max", "2")
    lines = r.stdout.strip().split("\n")
    check("profile-path csv", r.returncode == 0 and lines[0] == "t,k,count" and lines[1] == "0,1,0"
          and len(lines) == 7, r.stdout)

    r = run("limit-sample", "--k-max", "2", "--grid", "0.5,1", "--reps", "10")
    lines = r.stdout.strip().split("\n")
    check("limit-sample csv", r.returncode == 0 and lines[0] == "R1(0.5),R1(1),R2(0.5),R2(1)" and len(lines) == 11)

    r = run("covariance", "--k-max", "3", "--grid", "1")
    check("covariance matrix csv", r.returncode == 0 and r.stdout.split("\n")[0] == "index,R1(1),R2(1),R3(1)")

    # determinism of the acceptance suite across worker counts
    mode = [] if FULL else ["--quick"]
    digests = []
    for w in ("1", "8"):
        d = os.path.join(tmp, "verify" + w)
        r = run("verify", "--seed", "42", "--workers", w, "--out", d, *mode)
        check(f"verify exits 0 at {w} workers", r.returncode == 0, r.stderr[-2000:])
        data = open(os.path.join(d, "manifest.json"), "rb").read()
        digests.append(hashlib.sha256(data).hexdigest())
        manifest = json.loads(data)
        try:
            jsonschema.validate(manifest, SCHEMA)
            check(f"manifest validates against the schema ({w} workers)", True)
        except jsonschema.ValidationError as e:
            check(f"manifest validates against the schema ({w} workers)", False, e.message)
        check("manifest echoes the config", manifest["config"] == {"seed": 42, "quick": not FULL})
        names = [x["name"] for x in manifest["results"]]
        check("every result listed once", len(names) == len(set(names)))
        check("criteria 1-10 present", {x["criterion"] for x in manifest["results"] if x["gating"]} == set(range(1, 11)))
        info = json.load(open(os.path.join(d, "run_info.json")))
        check("run_info records workers and wall time", info["workers"] == int(w) and info["wall_seconds"] > 0)
    check("manifest hashes identical at 1 and 8 workers", digests[0] == digests[1], str(digests))

print(f"{len(failures)} failure(s)")
sys.exit(1 if failures else 0)

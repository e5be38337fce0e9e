#!/usr/bin/env python3
"""Drives the paxoslease binary as separate processes on loopback.

usage: cli_cluster_test.py <path-to-paxoslease>
"""
import os
import subprocess
import sys
import tempfile
import time

CLI = sys.argv[1]
BASE = 31000 + (os.getpid() % 500) * 10
MAX_LEASE = 1000
ACCEPTORS = [1, 2, 3]
CLIENTS = [4, 5]
PEERS = [f"--peer={i}={'127.0.0.1'}:{BASE + i}" for i in ACCEPTORS + CLIENTS]
COMMON = PEERS + ["--acceptors=1,2,3", f"--max-lease={MAX_LEASE}"]


def fail(msg):
    print("FAIL:", msg)
    sys.exit(1)


def start_nodes(store):
    procs = []
    for i in ACCEPTORS:
        procs.append(subprocess.Popen([CLI, "node", f"--id={i}", f"--store={store}/n{i}"] + COMMON,
                                      stdout=subprocess.PIPE, stderr=subprocess.STDOUT, text=True))
    time.sleep(MAX_LEASE / 1000 + 0.3)  # rejoin gate
    for p in procs:
        if p.poll() is not None:
            fail("node exited early: " + p.stdout.read())
    return procs


def client(store, ident, verb, *extra):
    return subprocess.Popen([CLI, verb, f"--id={ident}", f"--store={store}/c{ident}", "--resource=job"] + COMMON +
                            list(extra), stdout=subprocess.PIPE, stderr=subprocess.STDOUT, text=True)


def intervals(output, end):
    out, start = [], None
    for line in output.splitlines():
        parts = line.split()
        if len(parts) == 3 and parts[1] in ("owner", "not-owner"):
            t = int(parts[0])
            if parts[1] == "owner" and start is None:
                start = t
            elif parts[1] == "not-owner" and start is not None:
                out.append((start, t))
                start = None
    if start is not None:
        out.append((start, end))
    return out


def check_usage_errors(store):
    r = subprocess.run([CLI, "acquire", "--id=4", f"--store={store}/u", "--timespan=1000"] + COMMON,
                       capture_output=True, text=True)
    if r.returncode != 1 or "0 < T < M" not in r.stderr:
        fail(f"T >= M not refused: {r.returncode} {r.stderr}")
    r = subprocess.run([CLI, "node", "--id=1"] + COMMON, capture_output=True, text=True)
    if r.returncode != 1:
        fail(f"missing --store not a usage error: {r.returncode}")
    env = dict(os.environ, PAXOSLEASE_TIMESPAN="5000")
    r = subprocess.run([CLI, "acquire", "--id=4", f"--store={store}/u"] + COMMON, capture_output=True, text=True,
                       env=env)
    if r.returncode != 1:
        fail(f"env override not applied: {r.returncode}")
    print("ok usage errors")


SCENARIO = """\
name = cli-determinism
acceptors = 3
proposers = 3
persistent = true
delay_ms = 1..300
drop = 0.1
duplicate = 0.05
churn = acceptors 3000 10..2000
limit_ms = 15000
at = 0 p0 acquire
at = 0 p1 acquire
at = 200 p2 acquire
"""


def check_sim(store):
    path = os.path.join(store, "det.cfg")
    with open(path, "w") as f:
        f.write(SCENARIO)
    runs = [subprocess.run([CLI, "sim", f"--scenario={path}", "--seed=42", "--trace=-"], capture_output=True,
                           text=True) for _ in range(2)]
    if runs[0].returncode != 0 or runs[0].stdout != runs[1].stdout or runs[0].stdout.count("\n") < 100:
        fail(f"sim runs differ or failed: {runs[0].returncode} {runs[1].returncode}")
    r = subprocess.run([CLI, "sim", "--builtin=restart-gap"], capture_output=True, text=True)
    if r.returncode != 3:
        fail(f"overlapping run should exit 3, got {r.returncode}")
    print("ok sim determinism and exit status")


def check_concurrent(store):
    a = client(store, 4, "extend", "--timespan=400", "--hold=1500", "--timeout=8000")
    b = client(store, 5, "extend", "--timespan=400", "--hold=1500", "--timeout=8000")
    out_a, _ = a.communicate(timeout=30)
    out_b, _ = b.communicate(timeout=30)
    end = time.clock_gettime_ns(time.CLOCK_MONOTONIC) // 1000
    if a.returncode != 0 or b.returncode != 0:
        fail(f"clients failed: {a.returncode} {b.returncode}\n{out_a}\n{out_b}")
    ia, ib = intervals(out_a, end), intervals(out_b, end)
    if not ia or not ib:
        fail(f"both clients should eventually own\n{out_a}\n{out_b}")
    for s1, e1 in ia:
        for s2, e2 in ib:
            if min(e1, e2) > max(s1, s2):
                fail(f"overlap {max(s1, s2)}..{min(e1, e2)}\n{out_a}\n{out_b}")
    print(f"ok concurrent clients: {ia} {ib}")


def check_release(store):
    a = client(store, 4, "acquire", "--timespan=900", "--hold=200")
    out_a, _ = a.communicate(timeout=30)
    # The competitor's first rounds may be rejected until its epoch catches up
    # with the releasing client's, so it retries at once instead of backing off.
    b = client(store, 5, "acquire", "--timespan=900", "--hold=100", "--timeout=5000", "--retry=immediate")
    out_b, _ = b.communicate(timeout=30)
    if a.returncode != 0 or b.returncode != 0:
        fail(f"clients failed: {a.returncode} {b.returncode}\n{out_a}\n{out_b}")
    expires = [int(l.split()[-1]) for l in out_a.splitlines() if l.startswith("acquired")]
    owned_b = [int(l.split()[0]) for l in out_b.splitlines() if l.endswith(" owner job")]
    if not expires or not owned_b:
        fail(f"missing output\n{out_a}\n{out_b}")
    if not owned_b[0] < expires[0]:
        fail(f"competitor owned at {owned_b[0]}, not before the released lease's expiry {expires[0]}")
    print(f"ok release: competitor owned {(expires[0] - owned_b[0]) // 1000} ms before expiry")


def main():
    with tempfile.TemporaryDirectory() as store:
        check_usage_errors(store)
        check_sim(store)
        nodes = start_nodes(store)
        try:
            check_concurrent(store)
            check_release(store)
        finally:
            for p in nodes:
                p.terminate()
            for p in nodes:
                try:
                    out, _ = p.communicate(timeout=5)
                except subprocess.TimeoutExpired:
                    p.kill()
                    fail("node did not stop on SIGTERM")
                if p.returncode != 0:
                    fail(f"node exit {p.returncode}: {out}")
    print("PASS")


if __name__ == "__main__":
    main()

"""The quick cross-oracle self-test, and what a broken tolerance looks like."""

from cspolytope.harness import run_selftest

rep = run_selftest("quick")
for check in rep["checks"]:
    print(f"{check['name']:18s} {'pass' if check['passed'] else 'FAIL'}  {check['seconds']:.2f}s")
bad = run_selftest("quick", inject_fault=True)
print("with an injected face tolerance:", "pass" if bad["passed"] else "FAIL",
      bad["checks"][0]["detail"])

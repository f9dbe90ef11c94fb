"""Smoke test for the hetnet_py extension.

Build first:  pip install --no-build-isolation -e crates/py
"""

import json
import math

import hetnet_py as h


def close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    assert close(h.c_gamma(4.0), math.pi ** 2 / 2, 1e-9)
    d, regime = h.band_coverage(4.0, 1.0)
    assert close(d, 2 / math.pi, 1e-9), d
    print("band coverage", d, regime)

    p = h.SystemParams.comparison_defaults().with_reuse(3)
    print(p)
    rep = h.coverage(p)
    print("coverage", json.dumps(rep))
    assert close(h.outage(p), (1 - d) ** 3, 1e-9)

    rc = h.rate_coverage(p)
    print("rate coverage", rc)
    mr = h.mean_rate(p)
    assert mr > 0
    print("mean rate", mr)

    mc = h.monte_carlo(p, runs=2000, seed=7)
    print("monte carlo", mc)
    assert abs(mc["outage"]["mean"] - h.outage(p)) < 0.05

    again = h.monte_carlo(p, runs=2000, seed=7)
    assert again == mc

    assert h.feasibility_floor(4.0, 1.0, 0.1) == 2
    sol = h.plan()
    print("plan", sol["k"], sol["density_ratio"], sol["tag"])

    try:
        h.SystemParams(reuse=0)
    except ValueError as e:
        print("rejected:", e)
    else:
        raise AssertionError("reuse=0 accepted")

    print("OK")


if __name__ == "__main__":
    main()

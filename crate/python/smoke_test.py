"""Smoke test for the `pexp` extension module.

Build first with `cargo build --release -p pexp-py`; the script copies
target/release/libpexp.so (or the path in PEXP_LIB) next to a temp import path.
"""

import json
import math
import os
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load():
    lib = Path(os.environ.get("PEXP_LIB", ROOT / "target" / "release" / "libpexp.so"))
    if not lib.exists():
        sys.exit(f"extension not built: {lib}")
    tmp = tempfile.mkdtemp()
    shutil.copy(lib, Path(tmp) / "pexp.so")
    sys.path.insert(0, tmp)
    import pexp

    return pexp


def main():
    pexp = load()

    lap = pexp.PExp(1.0)
    assert abs(lap.pdf(0.0) - 0.5) < 1e-15
    assert abs(lap.cdf(lap.quantile(0.3)) - 0.3) < 1e-12
    xs = lap.sample(20000, seed=1)
    var = sum(x * x for x in xs) / len(xs)
    assert abs(var - 2.0) < 0.1, var

    r = pexp.rate_l2(1.0, 1.0, 2.0, 2.0)
    assert abs(r["poly_exponent"] - 1 / 3) < 1e-15
    r = pexp.rate_l2(0.0, 2.0, 1.0, 1.0, rescaled=True)
    assert abs(r["poly_exponent"] - 0.4) < 1e-15
    assert abs(r["lambda_poly_exponent"] - 0.2) < 1e-15
    assert abs(pexp.minimax(1.0) - 1 / 3) < 1e-15
    assert abs(pexp.linear_minimax(2.0, 1.0) - 0.375) < 1e-15
    rho, rho_t, comb = pexp.rate_sup(1.0, 1.0, 1.0)
    assert abs(rho_t - 7 / 24) < 1e-15 and comb == rho_t

    value, h = pexp.inf_term([-2.0, 0.0], 0.5, 2.0, 1.0)
    assert abs(h[0] + 1.5) < 1e-9 and value > 0

    neglog, lo, hi = pexp.smallball(2.0, 1.0, 1.0, n=64, samples=50000, seed=3)
    assert lo <= neglog <= hi

    u = pexp.sample_prior(1.0, 1.0, 5, seed=2)
    assert len(u) == 63

    grid = [i / 1024 for i in range(1025)]
    ramp = [2 * x for x in grid]
    hd = pexp.hellinger([1.0] * 1025, ramp, grid)
    assert abs(hd - math.sqrt(2 - 4 / 3 * math.sqrt(2))) < 1e-3

    cfg = {
        "model": "white-noise",
        "prior": {"p": 2, "alpha": 1},
        "truth": {"kind": "besov", "beta": 1, "q": 2, "delta": 0.05},
        "n_grid": [100, 200, 400, 800],
        "replicates": 3,
        "posterior_draws": 40,
        "master_seed": 5,
    }
    summary = json.loads(pexp.run_experiment(json.dumps(cfg)))
    assert summary["fitted_slope"] < 0
    assert len(summary["config_hash"]) == 40

    print("python smoke test passed")


if __name__ == "__main__":
    main()

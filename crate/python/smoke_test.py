"""End-to-end check of the pyrigcast bindings on a small synthetic corpus.

Build first:  maturin develop -m crates/python/Cargo.toml --release
"""

import math
import sys
import tempfile
from pathlib import Path

import pyrigcast as rc


def small_config() -> rc.Config:
    cfg = rc.Config()
    for key, value in [
        ("synth.n_wells", "12"),
        ("synth.hours_per_well", "48"),
        ("synth.accidents_per_type", "2"),
        ("codebook.k", "12"),
        ("boosting.n_estimators", "15"),
        ("crossval.folds", "2"),
    ]:
        cfg.set(key, value)
    return cfg


def main() -> int:
    cfg = small_config()
    assert cfg.get("codebook.k") == "12"
    try:
        cfg.set("no.such.key", "1")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown key accepted")

    # perfect reconstruction through the bindings
    x = [math.sin(i / 7.0) + 0.1 * i for i in range(144)]
    c = rc.dwt_decompose(x, "bior2.4", 3)
    y = rc.dwt_reconstruct(c, len(x), "bior2.4", 3)
    assert max(abs(a - b) for a, b in zip(x, y)) < 1e-9

    assert rc.roc_auc([0.1, 0.4, 0.35, 0.8], [False, False, True, True]) == 0.75
    assert rc.rand_index([0, 0, 1, 1], [5, 5, 7, 7]) == 1.0

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        wells, accidents, _ = rc.synth(cfg, tmp / "corpus")
        assert wells == 12 and accidents == 12
        digest = rc.train(cfg, tmp / "corpus", tmp / "m.bin")
        assert digest == rc.train(cfg, tmp / "corpus", tmp / "m2.bin")
        n, alarms, maxp = rc.predict(tmp / "m.bin", tmp / "corpus" / "well_000.csv", tmp / "a.csv", threshold=1.0)
        assert n > 0 and alarms == 0
        assert all(0.0 <= p <= 1.0 for _, p in maxp)
        try:
            rc.predict(tmp / "corpus" / "well_000.csv", tmp / "corpus" / "well_000.csv", tmp / "a.csv")
        except ValueError:
            pass
        else:
            raise AssertionError("corrupt artifact accepted")
        reports = rc.evaluate(cfg, tmp / "corpus", tmp / "eval")
        assert [r.label.split()[0] for r in reports] == ["bag_of_features", "bag_of_features", "breakdown"]
        for r in reports:
            print(r)
        assert (tmp / "eval" / "roc.csv").exists()

    print("smoke test ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())

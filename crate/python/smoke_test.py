"""Quick end-to-end check of the Python bindings.

Build first, e.g. `maturin develop -m crates/py/Cargo.toml`, then run
`python python/smoke_test.py`.
"""

import json
import os
import tempfile

import linearize


def main():
    c = linearize.generate("correct", 5)
    assert c.n == 5 and c.ids == [1, 2, 3, 4, 5]
    assert c.is_correct() and c.is_connected()
    assert c.potentials() == {"psi": 0, "psi_e": 8, "psi_sigma": 40, "lenmax": 1}

    same = linearize.Configuration.from_json(c.to_json())
    assert same == c
    assert json.loads(c.to_json()) == c.to_dict()

    start = linearize.generate("supergraph", 6, seed=3, extra=6)
    assert not start.is_correct()
    steps = start.enabled_steps()
    assert steps and all("kind" in s and "actor" in s for s in steps)
    after = start.apply_step(steps[0])
    assert after.potentials()["psi_e"] <= start.potentials()["psi_e"]

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "run.jsonl")
        r = linearize.simulate(start, seed=1, oracle=True, trace=path)
        assert r["outcome"] == "converged", r
        assert r["final_potentials"]["psi_sigma"] == 2 * 6 * 5
        report = linearize.check_trace(path)
        assert report["steps"] == r["steps"] and not report["mismatches"]

    e = linearize.explore(linearize.generate("correct", 3), depth=4)
    assert e["goal_holds"] and e["states"] == e["correct_states"]

    try:
        linearize.generate("supergraph", 4, extra=7)
    except ValueError:
        pass
    else:
        raise AssertionError("oversized extra accepted")
    print("smoke test ok")


if __name__ == "__main__":
    main()

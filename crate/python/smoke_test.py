"""Smoke test for the hkas extension module.

Build and install it first, e.g. ``maturin develop -m crates/py/Cargo.toml``.
"""

import json

import hkas


def main():
    g = hkas.AccessGraph.diamond()
    assert g.classes == ["r", "a", "b", "c"]
    assert g.accessible_set("a") == ["a", "c"]
    assert g.forbidden_set("a") == ["b", "c"]
    assert g.ancestor_set("a") == ["r"]
    assert g.well_ordered_all() == ["c", "b", "a", "r"]
    assert g.is_well_ordered(g.theorem_sequence("a"))

    trivial = hkas.gen_trivial(g, 2)
    assert trivial.is_secure()
    assert abs(trivial.entropy("H(K:a|S:b,S:c)") - 1.0) < 1e-12
    assert trivial.entropy("I(K:a;K:r)") < 1e-12

    leaky = hkas.gen_leaky(g, 2, "a", "b")
    assert leaky.check("correctness")["passed"]
    ki = leaky.check("ki")
    assert not ki["passed"]
    w = ki["witnesses"][0]
    assert (w["class"], w["secrets"]) == ("a", ["b"])
    assert not leaky.check("ski", exhaustive=True)["passed"]

    again = hkas.Scheme.from_json(trivial.to_json())
    assert again.to_json() == trivial.to_json()
    assert json.loads(again.to_json())["graph"]["classes"] == g.classes

    summary = hkas.validate(g, q=2, trials=5, seed=1)
    assert summary["discrepancies"] == 0 and summary["max_abs_err"] < 1e-9

    try:
        hkas.AccessGraph(["x", "y"], [("x", "y"), ("y", "x")])
    except hkas.HkasError as e:
        assert "cycle" in str(e).lower()
    else:
        raise AssertionError("cyclic graph accepted")
    try:
        trivial.entropy("H()")
    except ValueError:
        pass
    else:
        raise AssertionError("empty expression accepted")

    print("smoke test ok")


if __name__ == "__main__":
    main()

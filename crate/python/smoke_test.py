"""Smoke test for the pysubseries extension module.

Build and install first, e.g. `maturin develop -m crates/python/Cargo.toml`
or `pip install ./crates/python`, then run `python python/smoke_test.py`.
"""

import math

import pysubseries as ps


def close(a, b, rel=1e-12):
    return abs(a - b) <= rel * abs(b)


def main():
    star = ps.Sequence.star()
    assert star.eval(2) == 0.5
    assert close(star.eval(1), 1.0 / math.log(2.0))
    assert close(star.power(0.5).eval(2), math.sqrt(0.5))
    assert ps.Sequence("patch(harmonic,[(3,7.0)])").eval(3) == 7.0
    assert ps.Sequence("harmonic").tail_sup(100) == 0.01

    assert ps.IndexSet("primes").enumerate(4) == [2, 3, 5, 7]
    assert ps.IndexSet("primes-1").enumerate(4) == [1, 2, 4, 6]
    assert ps.IndexSet("odd(blocks(4..8))").upto(100) == [5, 7]
    assert ps.IndexSet("rootprimes(0.5)").enumerate(3) == [4, 9, 25]
    assert not ps.IndexSet("rootprimes(0.5)").contains(10)
    assert ps.nth_prime(100_000) == 1_299_709

    ((_, s, bound),) = ps.partial_sums(star, ps.IndexSet("primes"), [10])
    assert abs(s - 0.920771062643598752320607404944) <= bound

    prof = ps.growth_profile(ps.Sequence("harmonic"), ps.IndexSet("all"), [1000, 10000, 100000])
    assert prof["label"] == "EVIDENCE" and prof["best"] == "log"

    dom = ps.domination((star, ps.IndexSet("primes")), (star, ps.IndexSet("primes")), 1000)
    assert dom["constant"] == 1.0 and dom["argmax"] == 1

    game = ps.play_game("shrink", 4)
    assert game["passed"] and len(game["rounds"]) == 4

    wit = ps.build_witness(0.5, 1.0, "identity", 3)
    assert wit["passed"] and wit["t"] == 1.5
    assert all(0.5 < b[4] < 1.0 for b in wit["blocks"])

    rp = ps.root_prime_test(1.0, [1000, 10000, 100000])
    assert rp["literal"]["direct"]["best"] == "bounded"

    try:
        ps.Sequence("nonsense")
    except ValueError:
        pass
    else:
        raise AssertionError("bad grammar accepted")

    print("pysubseries smoke test: ok")


if __name__ == "__main__":
    main()

from thermospec.selftest import CHECKS, run_selftest


def test_every_invariant_suite_passes():
    results = run_selftest(seed=0)
    assert len(results) == len(CHECKS)
    for r in results:
        assert r.passed, f"{r.name}: {r.detail}"


def test_other_seed_also_passes():
    assert all(r.passed for r in run_selftest(seed=7))

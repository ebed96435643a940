import pytest

from entrolab.suites import SUITES, SuiteResult, run_suite


def test_suite_result_collects_failures():
    result = SuiteResult("demo")
    result.check(True, "fine")
    result.check(False, "broken")
    assert not result.ok
    assert result.failures == ["broken"]
    assert result.summary() == "2 instances checked, 1 failures"


def test_unknown_suite():
    with pytest.raises(KeyError):
        run_suite("bogus")


def test_suite_names():
    assert list(SUITES) == ["lattice", "measures", "sandwich", "chain", "variational"]


@pytest.mark.parametrize("name", ["lattice", "measures"])
def test_fast_suites_pass(name):
    result = run_suite(name)
    assert result.ok, result.failures
    assert result.checked > 100


@pytest.mark.slow
@pytest.mark.parametrize("name", ["sandwich", "chain", "variational"])
def test_slow_suites_pass(name):
    result = run_suite(name)
    assert result.ok, result.failures

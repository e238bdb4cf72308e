import numpy as np
import pytest

from scordant.replicates import THREADS_ENV, mc_cushion, run_replicates, thread_count


def test_thread_count_env(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    assert thread_count() == 1
    monkeypatch.setenv(THREADS_ENV, "4")
    assert thread_count() == 4
    for bad in ("0", "-2", "many"):
        monkeypatch.setenv(THREADS_ENV, bad)
        with pytest.raises(ValueError):
            thread_count()


def test_results_do_not_depend_on_threads():
    task = lambda i, rng: (i, float(rng.standard_normal()))
    serial = run_replicates(task, 50, seed=9, threads=1)
    threaded = run_replicates(task, 50, seed=9, threads=4)
    assert serial == threaded
    assert [i for i, _ in serial] == list(range(50))
    assert run_replicates(task, 50, seed=10)[0] != serial[0]


def test_cushion():
    assert mc_cushion(0.5, 500) == pytest.approx(3 * np.sqrt(0.001))
    assert mc_cushion(0.0, 10) == 0.0

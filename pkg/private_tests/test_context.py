"""
Run-wide settings and the block runner.
"""

import threading
import time

import pytest
from mpmath import mp

from astprove.background import run_blocks
from astprove.context import (
    DEFAULT_PRECISION, MIN_PRECISION, precision_digits, precision_scope, state_cap, worker_count,
    workers_scope,
)


class TestPrecision:

    def test_scope_sets_mpmath_digits(self):
        with precision_scope(50) as digits:
            assert digits == 50
            assert mp.dps == 50
        assert precision_digits() == DEFAULT_PRECISION

    def test_minimum(self):
        with precision_scope(5) as digits:
            assert digits == MIN_PRECISION

    def test_environment(self, monkeypatch):
        monkeypatch.setenv("ASTPROVE_PRECISION", "40")
        assert precision_digits() == 40
        with precision_scope(25):
            assert precision_digits() == 25

    def test_garbage_falls_back(self, monkeypatch):
        monkeypatch.setenv("ASTPROVE_PRECISION", "lots")
        assert precision_digits() == DEFAULT_PRECISION


class TestWorkers:

    def test_scope(self, monkeypatch):
        monkeypatch.setenv("ASTPROVE_WORKERS", "3")
        assert worker_count() == 3
        with workers_scope(8) as workers:
            assert workers == 8
        with workers_scope(0):
            assert worker_count() == 1

    def test_state_cap(self, monkeypatch):
        monkeypatch.setenv("ASTPROVE_STATE_CAP", "123")
        assert state_cap() == 123


def _slow_square(index, delay):
    time.sleep(delay)
    return index * index, threading.current_thread().name


class TestRunBlocks:

    def test_results_keep_submission_order(self):
        args = [(i, 0.02 * (5 - i)) for i in range(6)]
        results = run_blocks(_slow_square, args, max_workers=4)
        assert [r[0] for r in results] == [i * i for i in range(6)]
        assert any(name.startswith("astprove-sim") for _, name in results)

    def test_single_worker_runs_inline(self):
        results = run_blocks(_slow_square, [(2, 0), (3, 0)], max_workers=1)
        assert [r for r, _ in results] == [4, 9]
        assert all(name == threading.current_thread().name for _, name in results)

    def test_failures_propagate(self):
        def boom(i):
            if i == 2:
                raise RuntimeError("block failed")
            return i

        with pytest.raises(RuntimeError):
            run_blocks(boom, [(i,) for i in range(4)], max_workers=2)

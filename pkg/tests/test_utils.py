import threading
import time

from utils import ordered_map, timed, worker_count


def test_worker_count():
    assert worker_count(3) == 3
    assert worker_count(0) >= 1


def test_ordered_map_keeps_input_order():
    def slow_square(n):
        time.sleep(0.001 * (5 - n))
        return n * n, threading.current_thread().name

    results = list(ordered_map(slow_square, range(5), threads=4))
    assert [r for r, _ in results] == [0, 1, 4, 9, 16]
    assert list(ordered_map(lambda n: -n, [1, 2], threads=1)) == [-1, -2]


def test_timed_records_even_on_error():
    timings = {}
    try:
        with timed(timings, "stage"):
            raise RuntimeError("boom")
    except RuntimeError:
        pass
    assert timings["stage"] >= 0

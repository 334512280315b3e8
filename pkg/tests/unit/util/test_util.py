"""Unit tests for hubsync/util.py"""
import operator
from functools import partial

from hubsync.util import log_error, log_exception, parallel_map, print_failure


class TestLogError:
    def test_appends_timestamped_entries(self, tmp_path):
        log_file = tmp_path / "error.txt"
        log_error("first", str(log_file))
        log_error("second", str(log_file))
        content = log_file.read_text()
        assert content.count("ERROR:") == 2
        assert content.index("first") < content.index("second")

    def test_never_raises(self, tmp_path, capsys):
        log_error("lost", str(tmp_path / "missing-dir" / "error.txt"))
        assert "Failed to log error" in capsys.readouterr().err

    def test_exception_includes_traceback(self, tmp_path):
        log_file = tmp_path / "error.txt"
        try:
            raise RuntimeError("boom")
        except RuntimeError as e:
            log_exception(e, str(log_file))
        content = log_file.read_text()
        assert "Unhandled exception: boom" in content
        assert "Traceback" in content


class TestConsole:
    def test_messages_go_to_stderr(self, capsys):
        print_failure("bad things")
        captured = capsys.readouterr()
        assert captured.out == ""
        assert "bad things" in captured.err


class TestParallelMap:
    def test_sequential_keeps_order(self):
        assert parallel_map(partial(operator.mul, 3), [1, 2, 3]) == [3, 6, 9]

    def test_pool_keeps_order(self):
        assert parallel_map(abs, [-3, 2, -1, 0], jobs=2) == [3, 2, 1, 0]

    def test_empty(self):
        assert parallel_map(abs, [], jobs=4) == []

    def test_jobs_go_to_the_process_scheduler(self, mocker):
        compute = mocker.patch("hubsync.util.compute", return_value=(1, 2))
        assert parallel_map(abs, [-1, -2], jobs=8) == [1, 2]
        assert compute.call_args.kwargs == {"scheduler": "processes", "num_workers": 2}

    def test_single_job_stays_in_process(self, mocker):
        compute = mocker.patch("hubsync.util.compute")
        assert parallel_map(abs, [-1, -2], jobs=1) == [1, 2]
        compute.assert_not_called()

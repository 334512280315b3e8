"""Unit tests for hubsync/commands/scaling_command.py"""


class TestScalingCommand:
    def test_fit_is_reported_and_written(self, run_command, two_generator, mocker):
        mocker.patch("hubsync.bifurcation._cycle_period",
                     side_effect=lambda spec, settings: 2.0 * abs(spec.coupling[0] / 0.2 - 1.0) ** -0.5)
        result = run_command("scaling", two_generator, "--parameter", "K[2]", "--eps", "1e-4", "1e-3", "1e-2")
        assert "side=below" in result.text
        assert "exponent=-0.5 " in result.text
        rows = result.outputs[0].read_text().splitlines()
        assert rows[0] == "eps,coupling[2],period_s"
        assert len(rows) == 4

    def test_critical_option_skips_the_search(self, run_command, two_generator, mocker):
        mocker.patch("hubsync.bifurcation._cycle_period", return_value=1.0)
        nearest = mocker.patch("hubsync.bifurcation.nearest_threshold")
        result = run_command("scaling", two_generator, "--parameter", "K[2]", "--critical", "0.2")
        nearest.assert_not_called()
        assert "critical=0.20000000000000001" in result.text
        assert "side=below" in result.text

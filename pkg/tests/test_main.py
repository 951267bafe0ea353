from unittest.mock import AsyncMock, MagicMock, patch

import pytest

from experiments.checks import CheckLog, ExperimentOutcome
from main import EXIT_CHECKS_FAILED, EXIT_ERROR, EXIT_OK, async_main


def outcome_with(*results: bool) -> ExperimentOutcome:
    checks = CheckLog()
    for i, passed in enumerate(results):
        checks.add(f"check_{i}", passed, "expected")
    return ExperimentOutcome("volumes", checks)


class TestAsyncMain:
    """Test suite for the command-line entry point."""

    def setup_method(self):
        self.client_patcher = patch('main.get_client')
        mock_get_client = self.client_patcher.start()
        self.mock_langfuse = MagicMock()
        mock_get_client.return_value = self.mock_langfuse

    def teardown_method(self):
        self.client_patcher.stop()

    @pytest.mark.asyncio
    @patch('main.run_experiment', new_callable=AsyncMock)
    async def test_all_checks_pass(self, mock_run, capsys):
        """Exit code 0 and one PASS line per check."""
        mock_run.return_value = outcome_with(True, True)

        code = await async_main(["volumes", "--out", "results", "--seed", "4"])

        assert code == EXIT_OK
        config = mock_run.await_args.args[1]
        assert config.seed == 4
        out = capsys.readouterr().out
        assert out.count("[PASS]") == 2
        assert "2/2 checks passed" in out
        self.mock_langfuse.flush.assert_called_once()

    @pytest.mark.asyncio
    @patch('main.run_experiment', new_callable=AsyncMock)
    async def test_failed_check(self, mock_run, capsys):
        """Exit code 1 when any check fails."""
        mock_run.return_value = outcome_with(True, False)

        code = await async_main(["volumes", "--out", "results"])

        assert code == EXIT_CHECKS_FAILED
        assert "[FAIL] check_1" in capsys.readouterr().out

    @pytest.mark.asyncio
    @patch('main.run_experiment', new_callable=AsyncMock)
    async def test_runtime_error(self, mock_run, capsys):
        """Exit code 2 when the run cannot complete."""
        mock_run.side_effect = RuntimeError("Experiment scaling failed: Support radius 40 exceeds cap K_max=32")

        code = await async_main(["scaling", "--out", "results"])

        assert code == EXIT_ERROR
        assert "Error: Experiment scaling failed" in capsys.readouterr().out

    @pytest.mark.asyncio
    async def test_missing_config_file(self, tmp_path, capsys):
        """A missing configuration file is a run error, not a crash."""
        code = await async_main(["fkt", "--config", str(tmp_path / "absent.json"), "--out", str(tmp_path)])

        assert code == EXIT_ERROR
        assert "File not found" in capsys.readouterr().out

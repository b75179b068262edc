import math

import pytest

from config import Config
from utils import build_report, format_value, fsum_mean, fsum_mean_std, rms
from workflow_result import WorkflowResult


class TestStatistics:
    def test_mean_std(self):
        mean, std = fsum_mean_std([1.0, 2.0, 3.0, 4.0])
        assert mean == 2.5
        assert std == pytest.approx(math.sqrt(5 / 3), rel=1e-15)

    def test_single_value_has_zero_std(self):
        assert fsum_mean_std([0.25]) == (0.25, 0.0)

    def test_empty(self):
        mean, std = fsum_mean_std([])
        assert math.isnan(mean) and math.isnan(std)
        assert math.isnan(rms([]))

    def test_order_independent(self):
        values = [1e16, 1.0, -1e16, 3.0, 1e-3]
        assert fsum_mean(values) == fsum_mean(reversed(values)) == fsum_mean(sorted(values))

    def test_rms(self):
        assert rms([3.0, -4.0]) == pytest.approx(math.sqrt(12.5), rel=1e-15)


class TestReport:
    def test_sections_and_alignment(self):
        body = build_report("Bound report", {"Bounds": {"u": 2.0 ** -11, "rows": 8}})
        lines = body.splitlines()
        assert lines[0] == "Bound report"
        assert lines[1] == "=" * len("Bound report")
        assert "  u    : 4.882812e-04" in lines
        assert "  rows : 8" in lines

    def test_format_value(self):
        assert format_value(0.5) == "5.000000e-01"
        assert format_value("half") == "half"


class TestConfig:
    def test_defaults_validate(self):
        Config.validate()

    def test_invalid_workers(self, monkeypatch):
        monkeypatch.setattr(Config, 'DEFAULT_WORKERS', 0)
        with pytest.raises(ValueError, match="LSBENCH_WORKERS"):
            Config.validate()

    def test_missing_presets(self, monkeypatch, tmp_path):
        monkeypatch.setattr(Config, 'SWEEP_PRESETS_PATH', tmp_path / 'none.json')
        with pytest.raises(ValueError, match="SWEEP_PRESETS_PATH"):
            Config.validate()

    def test_output_path_is_dated(self, monkeypatch, tmp_path):
        monkeypatch.setattr(Config, 'OUTPUT_DIR', tmp_path)
        path = Config.get_output_path()
        assert path.parent == tmp_path and path.is_dir()
        assert path.name == Config.get_date_folder()


def test_workflow_result_defaults():
    result = WorkflowResult(success=True)
    assert result.exit_code == 0 and result.data is None and result.error is None

import json
import math

import numpy as np
import pandas as pd
import pytest

from errors import ConfigError, ValidationError
from run_sweep import (CSV_COLUMNS, SweepConfig, config_from_preset, load_presets, run_sweep, run_sweep_workflow,
                       run_trials)
from svg_plot import render_sweep_svg


def _small(**kwargs):
    values = dict(rows=8, cols=4, cond_min=1.0, cond_max=10.0, cond_points=3, trials=4, mantissa_bits=10,
                  seed=42, workers=1)
    values.update(kwargs)
    return SweepConfig(**values)


class TestSweepConfig:
    @pytest.mark.parametrize("kwargs", [
        dict(cond_min=0.5),
        dict(cond_points=0),
        dict(trials=0),
        dict(rows=3, cols=4),
        dict(cond_min=10.0, cond_max=2.0),
        dict(workers=0),
        dict(mantissa_bits=60),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValidationError):
            _small(**kwargs).validate()

    def test_grid(self):
        assert np.allclose(_small(cond_points=3, cond_min=1.0, cond_max=100.0).cond_grid(), [1.0, 10.0, 100.0])
        assert list(_small(cond_points=1, cond_min=5.0).cond_grid()) == [5.0]


class TestPresets:
    def test_bundled_presets(self):
        presets = load_presets()
        assert presets['square32']['rows'] == 32 and presets['square32']['cols'] == 32
        assert presets['tall64x12']['rows'] == 64 and presets['tall64x12']['cols'] == 12

    def test_overrides(self):
        config = config_from_preset('tall64x12', trials=7, seed=None)
        assert (config.rows, config.cols, config.trials, config.name) == (64, 12, 7, 'tall64x12')

    def test_reference_presets_form_wy_in_working_precision(self):
        assert not config_from_preset('square32').apply_wy_in_lp
        assert not config_from_preset('tall64x12').apply_wy_in_lp
        assert config_from_preset('square32', apply_wy_in_lp=True).apply_wy_in_lp
        assert config_from_preset('smoke').apply_wy_in_lp

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            config_from_preset('nope')

    def test_bad_file(self, tmp_path):
        path = tmp_path / 'presets.json'
        path.write_text(json.dumps([{"name": "x", "rows": 4}]))
        with pytest.raises(ConfigError):
            load_presets(path)
        with pytest.raises(ConfigError):
            load_presets(tmp_path / 'missing.json')


class TestRunSweep:
    def test_table_shape_and_counts(self):
        df = run_sweep(_small())
        assert list(df.columns) == CSV_COLUMNS
        assert len(df) == 3
        assert ((df['trials_ok'] + df['trials_failed']) == 4).all()
        assert np.allclose(df['cond2_H_mean'], df['cond_target'], rtol=1e-8)

    def test_trials_are_independent_of_chunking(self):
        one = run_trials(_small(workers=1))
        many = run_trials(_small(workers=3))
        assert [(o.point, o.trial, o.rel_err) for o in one] == [(o.point, o.trial, o.rel_err) for o in many]

    def test_well_conditioned_single_trial(self):
        df = run_sweep(_small(rows=32, cols=32, cond_points=1, trials=1))
        eps = 2.0 ** -11 / math.sqrt(3)
        assert df['std_rel_err'][0] == 0.0
        assert 0 < df['mean_rel_err'][0] <= 100 * eps

    def test_working_precision_is_exact(self):
        df = run_sweep(_small(mantissa_bits=52, cond_max=1000.0))
        assert (df['mean_rel_err'] <= 1e-9).all()

    def test_bound_columns(self):
        df = run_sweep(_small(cond_min=2.0, cond_max=20.0))
        assert (df['bound_final'] <= df['bound_final_cond2'] * (1 + 1e-12)).all()
        slope = np.diff(np.log(df['bound_final_cond2'])) / np.diff(np.log(df['cond_target']))
        assert np.allclose(slope, 2.0, rtol=1e-2)
        n = 4
        assert np.allclose(df['bound_classical_fro'], (n + 1) * math.sqrt(n) * 2.0 ** -11)

    def test_mean_error_below_cond2_bound(self):
        df = run_sweep(_small(rows=16, cols=16, cond_min=3.0, cond_max=30.0, cond_points=4, trials=20))
        assert (df['mean_rel_err'] <= df['bound_final_cond2']).all()

    @pytest.mark.slow
    def test_square_half_precision_protocol(self):
        config = config_from_preset('square32', seed=42, workers=1, mantissa_bits=10)
        assert not config.apply_wy_in_lp
        df = run_sweep(config)
        assert (df['mean_rel_err'] <= df['bound_final_cond2']).sum() >= 19
        mid = df[(df['cond_target'] >= 3) & (df['trials_ok'] > 0)]
        assert (mid['bound_final_cond2'] <= 30 * mid['mean_rel_err']).all()
        # cond_F form within 15 dB of the measured mean
        assert (np.abs(10 * np.log10(mid['bound_final'] / mid['mean_rel_err'])) <= 15).all()
        # slope where cond^2 amplification dominates and errors are not yet saturated
        band = mid[(mid['cond_target'] >= 10) & (mid['cond_target'] <= 50)]
        slope = np.polyfit(np.log(band['cond_target']), np.log(band['mean_rel_err']), 1)[0]
        assert 1.5 <= slope <= 2.5

    @pytest.mark.slow
    def test_low_precision_apply_stays_near_bound(self):
        # W·Y rounding adds an error of the bound's own size when cond_2(H) is near 1
        config = SweepConfig(rows=32, cols=32, cond_min=1.0, cond_max=100.0, cond_points=20, trials=200,
                             mantissa_bits=10, seed=42, workers=1, apply_wy_in_lp=True)
        df = run_sweep(config)
        ratio = df['mean_rel_err'] / df['bound_final_cond2']
        assert (ratio <= 1.25).all()
        assert (ratio[df['cond_target'] >= 3] <= 1.0).all()

    @pytest.mark.slow
    def test_determinism_across_workers(self, tmp_path):
        base = dict(rows=32, cols=32, cond_min=1.0, cond_max=100.0, cond_points=20, trials=200,
                    mantissa_bits=10, seed=42)
        run_sweep_workflow(SweepConfig(workers=1, out_csv=tmp_path / 'a.csv', **base))
        run_sweep_workflow(SweepConfig(workers=8, out_csv=tmp_path / 'b.csv', **base))
        assert (tmp_path / 'a.csv').read_bytes() == (tmp_path / 'b.csv').read_bytes()


class TestWorkflow:
    def test_writes_csv_svg_and_xlsx(self, tmp_path):
        config = _small(out_csv=tmp_path / 'sweep.csv', out_svg=tmp_path / 'sweep.svg', out_xlsx=tmp_path / 'sweep.xlsx')
        result = run_sweep_workflow(config)
        assert result.success and result.exit_code == 0
        header = (tmp_path / 'sweep.csv').read_text().splitlines()[0]
        assert header == ",".join(CSV_COLUMNS)
        assert (tmp_path / 'sweep.svg').read_text().startswith('<svg')
        assert list(pd.read_excel(tmp_path / 'sweep.xlsx', sheet_name='sweep').columns) == CSV_COLUMNS

    def test_identical_config_identical_bytes(self, tmp_path):
        run_sweep_workflow(_small(out_csv=tmp_path / 'a.csv'))
        run_sweep_workflow(_small(out_csv=tmp_path / 'b.csv', workers=2))
        assert (tmp_path / 'a.csv').read_bytes() == (tmp_path / 'b.csv').read_bytes()

    def test_invalid_config_reports_validation_exit_code(self, tmp_path):
        result = run_sweep_workflow(_small(trials=0, out_csv=tmp_path / 'x.csv'))
        assert not result.success
        assert result.exit_code == 2
        assert not (tmp_path / 'x.csv').exists()


class TestSvg:
    def _table(self):
        return pd.DataFrame({
            'cond_target': [1.0, 10.0, 100.0],
            'mean_rel_err': [1e-3, 1e-2, 1e-1],
            'std_rel_err': [2e-3, 5e-3, 5e-2],
            'bound_final': [2e-3, 2e-2, 2e-1],
            'bound_final_cond2': [5e-3, 5e-1, 50.0],
        })

    def test_layout(self):
        svg = render_sweep_svg(self._table(), "demo")
        assert svg.startswith('<svg') and svg.rstrip().endswith('</svg>')
        assert svg.count('<polyline') == 3
        assert '<polygon' in svg
        assert 'mean relative error' in svg and 'stroke-dasharray' in svg
        assert '>demo<' in svg

    def test_skips_non_positive_values(self):
        table = self._table()
        table.loc[1, 'mean_rel_err'] = float('nan')
        table.loc[0, 'bound_final'] = 0.0
        svg = render_sweep_svg(table, "gaps")
        assert 'nan' not in svg and 'inf' not in svg

    def test_single_point(self):
        svg = render_sweep_svg(self._table().iloc[:1], "one")
        assert 'nan' not in svg

"""
Monte-Carlo condition-number sweep.

For every log-spaced target condition number, `trials` independent RANDSVD
channel matrices H and unit symbols x0 are drawn, Y = H x0 is formed and the
emulated least-squares solve is compared with the exact one. Each trial owns
the stream RngStream(seed, (point, trial)), and aggregation uses compensated
sums, so the table is identical for any number of workers.

The table is written as CSV (one row per point), optionally with an SVG
figure and an XLSX workbook.
"""

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from bounds import bound_final, bound_final_cond2, gram_conditions_from_spectrum
from config import Config
from ensembles import RandsvdSpec, RngStream, randsvd, random_unit_vector
from errors import ConfigError, NumericalFailure, ValidationError, exit_code_for
from ls_pipeline import consistent_rhs, measure_error
from precision import ExponentRange, PrecisionContext
from svg_plot import write_sweep_svg
from utils import fsum_mean, fsum_mean_std, get_logger
from workflow_result import WorkflowResult

logger = get_logger('sweep_workflow', 'sweep')

CSV_COLUMNS = [
    'cond_target', 'cond2_H_mean', 'condF_A_mean', 'trials_ok', 'trials_failed',
    'mean_rel_err', 'std_rel_err', 'mean_backward_err', 'mean_gram_err',
    'bound_final', 'bound_final_cond2', 'bound_classical_fro',
]
CSV_FLOAT_FORMAT = '%.10e'

PRESET_FIELDS = ('rows', 'cols', 'cond_min', 'cond_max', 'cond_points', 'trials')
OPTIONAL_PRESET_FIELDS = ('apply_wy_in_lp',)


@dataclass
class SweepConfig:
    """One sweep: matrix shape, cond grid, trial count and arithmetic"""
    rows: int = 32
    cols: int = 32
    cond_min: float = 1.0
    cond_max: float = 100.0
    cond_points: int = 20
    trials: int = 100
    mantissa_bits: int = field(default_factory=lambda: Config.DEFAULT_MANTISSA_BITS)
    fma: bool = True
    clamp: bool = False
    apply_wy_in_lp: bool = True
    seed: int = field(default_factory=lambda: Config.DEFAULT_SEED)
    workers: int = field(default_factory=lambda: Config.DEFAULT_WORKERS)
    name: str = 'sweep'
    out_csv: Optional[Path] = None
    out_svg: Optional[Path] = None
    out_xlsx: Optional[Path] = None

    def validate(self):
        problems = []
        if self.rows < 1 or self.cols < 1:
            problems.append(f"matrix size must be positive, got {self.rows}x{self.cols}")
        if self.rows < self.cols:
            problems.append(f"rows ({self.rows}) must be >= cols ({self.cols})")
        if not self.cond_min >= 1.0:
            problems.append(f"cond_min must be >= 1, got {self.cond_min}")
        if not self.cond_max >= self.cond_min:
            problems.append(f"cond_max ({self.cond_max}) must be >= cond_min ({self.cond_min})")
        if self.cond_points < 1:
            problems.append(f"cond_points must be >= 1, got {self.cond_points}")
        if self.trials < 1:
            problems.append(f"trials must be >= 1, got {self.trials}")
        if not 1 <= self.mantissa_bits <= 52:
            problems.append(f"mantissa_bits must be in 1..52, got {self.mantissa_bits}")
        if self.workers < 1:
            problems.append(f"workers must be >= 1, got {self.workers}")
        if problems:
            raise ValidationError("Invalid sweep configuration: " + "; ".join(problems))

    def context(self) -> PrecisionContext:
        exponent_range = ExponentRange.IEEE_BINARY16 if self.clamp else ExponentRange.UNBOUNDED
        return PrecisionContext(self.mantissa_bits, fma=self.fma, exponent_range=exponent_range)

    def cond_grid(self) -> np.ndarray:
        if self.cond_points == 1:
            return np.array([float(self.cond_min)])
        return np.geomspace(self.cond_min, self.cond_max, self.cond_points)


def load_presets(path: Optional[Path] = None) -> Dict[str, dict]:
    """Named sweep presets from the JSON list at `path` (default Config.SWEEP_PRESETS_PATH)"""
    path = Path(path or Config.SWEEP_PRESETS_PATH)
    try:
        with open(path, 'r') as f:
            entries = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"Sweep presets file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"Sweep presets file {path} is not valid JSON: {e}")

    presets = {}
    for entry in entries:
        missing = [key for key in ('name',) + PRESET_FIELDS if key not in entry]
        if missing:
            raise ConfigError(f"Preset {entry.get('name', '?')} in {path} is missing {', '.join(missing)}")
        presets[entry['name']] = {key: entry[key] for key in PRESET_FIELDS + OPTIONAL_PRESET_FIELDS if key in entry}
    return presets


def config_from_preset(name: str, path: Optional[Path] = None, **overrides) -> SweepConfig:
    """SweepConfig for preset `name`; keyword overrides that are not None win"""
    presets = load_presets(path)
    if name not in presets:
        raise ConfigError(f"Unknown sweep preset '{name}' (available: {', '.join(sorted(presets))})")
    known = {f.name for f in fields(SweepConfig)}
    values = dict(presets[name], name=name)
    values.update({k: v for k, v in overrides.items() if v is not None and k in known})
    return SweepConfig(**values)


@dataclass
class TrialOutcome:
    point: int
    trial: int
    cond2_h: float
    cond_f_a: float
    rel_err: float
    backward_err: float
    gram_err: float
    failed: bool
    stage: str


def _run_trial(config: SweepConfig, ctx: PrecisionContext, point: int, trial: int, cond: float) -> TrialOutcome:
    gen = RngStream(config.seed, (point, trial)).generator()
    spec = RandsvdSpec(config.rows, config.cols, cond=cond)
    h = randsvd(spec, gen)
    x0 = random_unit_vector(config.cols, gen)
    y = consistent_rhs(h, x0)
    # the RANDSVD spectrum is known, so no SVD per trial
    conds = gram_conditions_from_spectrum(spec.spectrum())

    try:
        m = measure_error(h, y, ctx, config.apply_wy_in_lp)
    except NumericalFailure as e:
        return TrialOutcome(point, trial, conds.cond2_h, conds.cond_f_a,
                            math.nan, math.nan, math.nan, True, f"reference: {e}")
    return TrialOutcome(point, trial, conds.cond2_h, conds.cond_f_a,
                        m.rel_err, m.backward_err, m.gram_err, m.failed, m.failure_stage.value)


def _run_chunk(args: Tuple[SweepConfig, int, int, int, float]) -> List[TrialOutcome]:
    config, point, start, stop, cond = args
    ctx = config.context()
    return [_run_trial(config, ctx, point, t, cond) for t in range(start, stop)]


def _chunks(config: SweepConfig, grid: np.ndarray) -> List[Tuple[SweepConfig, int, int, int, float]]:
    size = max(1, math.ceil(config.trials / config.workers))
    return [
        (config, p, start, min(start + size, config.trials), float(cond))
        for p, cond in enumerate(grid)
        for start in range(0, config.trials, size)
    ]


def run_trials(config: SweepConfig) -> List[TrialOutcome]:
    """Every trial of the sweep, ordered by (point, trial)"""
    grid = config.cond_grid()
    # output files do not cross the process boundary
    worker_config = replace(config, out_csv=None, out_svg=None, out_xlsx=None)
    tasks = _chunks(worker_config, grid)

    if config.workers == 1:
        results = [_run_chunk(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as executor:
            results = list(executor.map(_run_chunk, tasks))

    outcomes = [o for chunk in results for o in chunk]
    outcomes.sort(key=lambda o: (o.point, o.trial))
    return outcomes


def aggregate(config: SweepConfig, outcomes: List[TrialOutcome]) -> pd.DataFrame:
    """One row per cond point; error statistics over successful trials only"""
    ctx = config.context()
    m, n = config.rows, config.cols
    rows = []
    for p, cond in enumerate(config.cond_grid()):
        point = [o for o in outcomes if o.point == p]
        ok = [o for o in point if not o.failed]
        for o in point:
            if o.failed:
                logger.warning(f"Trial {o.trial} at cond {cond:.4g} failed at {o.stage} stage")

        cond_f_mean = fsum_mean(o.cond_f_a for o in point)
        mean_rel, std_rel = fsum_mean_std(o.rel_err for o in ok)
        rows.append({
            'cond_target': float(cond),
            'cond2_H_mean': fsum_mean(o.cond2_h for o in point),
            'condF_A_mean': cond_f_mean,
            'trials_ok': len(ok),
            'trials_failed': len(point) - len(ok),
            'mean_rel_err': mean_rel,
            'std_rel_err': std_rel,
            'mean_backward_err': fsum_mean(o.backward_err for o in ok),
            'mean_gram_err': fsum_mean(o.gram_err for o in ok),
            'bound_final': bound_final(m, n, cond_f_mean, ctx),
            'bound_final_cond2': bound_final_cond2(m, math.sqrt(fsum_mean(o.cond2_h ** 2 for o in point)), ctx),
            # relative to ||A||_F, like the error columns
            'bound_classical_fro': (n + 1) * math.sqrt(n) * ctx.u,
        })
        logger.info(
            f"cond {cond:.4g}: {len(ok)}/{len(point)} ok, mean rel err {mean_rel:.3e}, "
            f"bound {rows[-1]['bound_final']:.3e}"
        )
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


def write_outputs(config: SweepConfig, df: pd.DataFrame) -> Dict[str, Path]:
    """CSV always (default: today's output folder), SVG and XLSX on request"""
    written = {}
    out_csv = Path(config.out_csv) if config.out_csv else \
        Config.get_output_path() / f"{config.name}_{datetime.now().strftime('%Y%m%d')}.csv"
    out_csv.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(out_csv, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator='\n')
    written['csv'] = out_csv
    logger.info(f"Saved sweep table to {out_csv}")

    if config.out_svg:
        title = f"{config.name}: {config.rows}x{config.cols}, b={config.mantissa_bits}, {config.trials} trials/point"
        written['svg'] = write_sweep_svg(df, config.out_svg, title)

    if config.out_xlsx:
        out_xlsx = Path(config.out_xlsx)
        out_xlsx.parent.mkdir(parents=True, exist_ok=True)
        settings = {k: str(v) for k, v in asdict(config).items() if not k.startswith('out_')}
        with pd.ExcelWriter(out_xlsx, engine='openpyxl') as writer:
            df.to_excel(writer, sheet_name='sweep', index=False)
            pd.DataFrame(list(settings.items()), columns=['setting', 'value']).to_excel(
                writer, sheet_name='config', index=False)
        written['xlsx'] = out_xlsx
        logger.info(f"Saved sweep workbook to {out_xlsx}")

    return written


def run_sweep(config: SweepConfig) -> pd.DataFrame:
    """Validate, run all trials and aggregate (no files written)"""
    config.validate()
    logger.info(
        f"Starting sweep {config.name}: {config.rows}x{config.cols}, cond {config.cond_min:g}..{config.cond_max:g} "
        f"({config.cond_points} points x {config.trials} trials), {config.context().describe()}, "
        f"seed {config.seed}, {config.workers} worker(s)"
    )
    return aggregate(config, run_trials(config))


def run_sweep_workflow(config: SweepConfig) -> WorkflowResult:
    """
    Run the sweep and write its outputs.

    Returns:
        WorkflowResult: data is the sweep DataFrame on success
    """
    try:
        df = run_sweep(config)
        write_outputs(config, df)
        logger.info(f"Successfully completed sweep {config.name}")
        return WorkflowResult(success=True, data=df)

    except Exception as e:
        error_msg = f"Error in sweep workflow: {str(e)}"
        logger.error(error_msg)
        return WorkflowResult(success=False, error=error_msg, exit_code=exit_code_for(e))


if __name__ == "__main__":
    result = run_sweep_workflow(SweepConfig(cond_points=5, trials=20))
    if result.success:
        print(result.data.to_string(index=False))
    else:
        print(result.error)

import os
from pathlib import Path
from dotenv import load_dotenv
from datetime import datetime

# Load environment variables from .env file
env_path = Path(__file__).parent.parent / '.env'
load_dotenv(env_path)


def _env_flag(name: str, default: str) -> bool:
    return os.getenv(name, default).strip().lower() not in ('0', 'false', 'no', 'off', '')


class Config:
    # Project paths
    OUTPUT_DIR = Path(os.getenv('OUTPUT_DIR', 'output'))
    LOGS_DIR = Path(os.getenv('LOGS_DIR', 'logs'))
    SWEEP_PRESETS_PATH = Path(os.getenv('SWEEP_PRESETS_PATH', str(Path(__file__).parent / 'sweeps.json')))

    # Logging
    LOG_TO_FILE = _env_flag('LOG_TO_FILE', '1')

    # Experiment defaults (CLI flags override these)
    DEFAULT_SEED = int(os.getenv('LSBENCH_SEED', '0'))
    DEFAULT_WORKERS = int(os.getenv('LSBENCH_WORKERS', '1'))
    DEFAULT_MANTISSA_BITS = int(os.getenv('LSBENCH_MANTISSA_BITS', '10'))

    @classmethod
    def validate(cls):
        """Validate configuration values"""
        problems = []
        if cls.DEFAULT_WORKERS < 1:
            problems.append(f"LSBENCH_WORKERS must be >= 1 (got {cls.DEFAULT_WORKERS})")
        if not 1 <= cls.DEFAULT_MANTISSA_BITS <= 52:
            problems.append(f"LSBENCH_MANTISSA_BITS must be in 1..52 (got {cls.DEFAULT_MANTISSA_BITS})")
        if not cls.SWEEP_PRESETS_PATH.exists():
            problems.append(f"SWEEP_PRESETS_PATH not found: {cls.SWEEP_PRESETS_PATH}")

        if problems:
            raise ValueError(
                "Invalid configuration:\n  " + "\n  ".join(problems) + "\n"
                "Please check your .env file and environment variables."
            )

    @classmethod
    def get_date_folder(cls):
        """Get today's date folder name"""
        return datetime.now().strftime("%Y%m%d")

    @classmethod
    def get_output_path(cls):
        """
        Get output directory path for today's date.
        Sweep tables and figures without an explicit path land here.

        Returns:
            Path object for today's output directory
        """
        date_path = cls.OUTPUT_DIR / cls.get_date_folder()
        date_path.mkdir(parents=True, exist_ok=True)
        return date_path

    @classmethod
    def get_logs_path(cls):
        """
        Get logs directory path for today's date.
        Creates a new folder for each day's logs.

        Returns:
            Path object for today's logs directory
        """
        date_path = cls.LOGS_DIR / cls.get_date_folder()
        date_path.mkdir(parents=True, exist_ok=True)
        return date_path

"""Configuration, runs, scans, figure presets and the CLI."""

from .config import ScanAxis, ScanSpec, SystemConfig, config_to_dict, parse_config, parse_scan, scan_to_dict
from .presets import PRESETS, run_preset
from .runner import ScanResult, run_config, run_scan

__all__ = [
    "PRESETS",
    "ScanAxis",
    "ScanResult",
    "ScanSpec",
    "SystemConfig",
    "config_to_dict",
    "parse_config",
    "parse_scan",
    "run_config",
    "run_preset",
    "run_scan",
    "scan_to_dict",
]

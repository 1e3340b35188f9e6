import os
import sys
from typing import List, Tuple

_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def validate_env_vars() -> Tuple[bool, List[str]]:
    """
    Validate the optional BORPS_* environment variables.
    Returns (is_valid, problems)
    """
    optional_vars = {
        "BORPS_THREADS": "machine parallelism",
        "BORPS_LOG_LEVEL": "INFO",
        "BORPS_DEBUG": "False",
    }

    problems = []

    threads = os.getenv("BORPS_THREADS")
    if threads is not None and not validate_thread_count(threads):
        problems.append(f"BORPS_THREADS={threads!r} (expected a positive integer)")

    level = os.getenv("BORPS_LOG_LEVEL")
    if level is not None and level.upper() not in _LOG_LEVELS:
        problems.append(f"BORPS_LOG_LEVEL={level!r} (expected one of {', '.join(_LOG_LEVELS)})")

    debug = os.getenv("BORPS_DEBUG")
    if debug is not None and debug.lower() not in ("true", "false", "1", "0"):
        problems.append(f"BORPS_DEBUG={debug!r} (expected true or false)")

    if problems:
        # Use print instead of logger to avoid circular import
        print("ERROR: Invalid environment variables:", file=sys.stderr)
        for problem in problems:
            print(f"  - {problem}", file=sys.stderr)
        print(f"Defaults: {optional_vars}", file=sys.stderr)
        return False, problems

    return True, []


def validate_thread_count(value: str) -> bool:
    """Validate a BORPS_THREADS value"""
    try:
        return int(value) > 0
    except ValueError:
        return False


def get_thread_count() -> int:
    """Get the concurrency cap from the environment or the machine"""
    threads = os.getenv("BORPS_THREADS", "")
    if threads and validate_thread_count(threads):
        return int(threads)
    return os.cpu_count() or 1

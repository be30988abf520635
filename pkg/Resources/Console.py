import os
import sys

# Globals
DEBUG_MODE: bool = os.environ.get("KLOOSTERMAN_DEBUG", "").lower() in ("1", "true", "yes")


def set_debug(enabled: bool) -> None:
    global DEBUG_MODE
    DEBUG_MODE = enabled


def log(tag: str, message: str) -> None:
    """Prints a tagged progress line. stdout is reserved for result records."""
    print(f"[{tag}] {message}", file=sys.stderr, flush=True)


def debug(tag: str, message: str) -> None:
    if DEBUG_MODE:
        log(tag, message)


def warn(tag: str, message: str) -> None:
    log(tag, f"WARNING: {message}")

"""
petforge - Main Entry Point
`python main.py <command> [options]` runs the same commands as `python -m petforge`.
"""
import sys

from petforge.cli import main

if __name__ == "__main__":
    sys.exit(main())

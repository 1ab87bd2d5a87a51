"""
`python -m petforge <command>`
"""
import sys

from petforge.cli import main

sys.exit(main())

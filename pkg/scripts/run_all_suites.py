#!/usr/bin/env python3
"""Run every verification suite with its default configuration.

Reports land in $SIGCONE_OUT_DIR (default ./reports); exit status is nonzero
if any row fails.
"""

import sys

from sigcone.cli import main

if __name__ == "__main__":
    sys.exit(main(["verify", "all", *sys.argv[1:]]))

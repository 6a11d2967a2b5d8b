#!/usr/bin/env python
#
# simple command-line driver for the sasv package
#
# Usage: run_sasv.py [-d|-q] <command> [options]   (see --help)
#
import sys

from sasv.Cli import main

if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3

import logging
import sys

from logmodcert.cli import run

if __name__ == "__main__":
    logging.basicConfig(level="INFO", format="[%(levelname)s] %(message)s")
    raise SystemExit(run(sys.argv[1:]))

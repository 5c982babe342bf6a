"""Main entry point for the fractional delay equation analyzer CLI."""

import logging
import sys
from typing import List, Optional

from src.config import LOG_LEVEL
from src.controller import exit_code_for, parse_args, report_error, run
from src.exceptions import FddeError


def main(argv: Optional[List[str]] = None) -> int:
    """Parse the command line, run the command and return the exit code.

    Exit codes:
    - 0 success, 1 output file error, 2 usage error, 3 invalid value,
      4 numerical-domain error, 5 divergence (output still written)
    """
    logging.basicConfig(
        level=LOG_LEVEL,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        config = parse_args(argv)
    except FddeError as e:
        code = exit_code_for(e)
        report_error(e, code)
        return code
    return run(config)


if __name__ == "__main__":
    sys.exit(main())

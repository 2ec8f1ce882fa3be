"""Expose the lattice toolkit to the command line."""

import logging
import sys

from . import cli


def main() -> None:
    """Entrypoint of the console script."""
    logging.basicConfig(
        format="%(asctime)s - %(levelname)s - %(message)s", level=logging.INFO
    )
    sys.exit(cli.main(cli.parse(sys.argv[1:])))


if __name__ == "__main__":
    main()

from dotenv import load_dotenv
load_dotenv()
import logging
import sys

from src.cli.interface import run
from src.utils.config import log_level


def main():
    logging.basicConfig(
        level=log_level(),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s [%(name)s] %(message)s",
    )
    sys.exit(run(sys.argv[1:]))


if __name__ == '__main__':
    main()

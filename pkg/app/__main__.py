"""qmarginal command line via ``python -m app``."""

import sys

from app.run import main

if __name__ == "__main__":
    main(sys.argv[1:])

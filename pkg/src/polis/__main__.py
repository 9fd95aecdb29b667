import sys

from polis.cli import main

sys.exit(main())

import sys

from logderiv.cli import main

sys.exit(main())

import sys

from mtreg.cli import main

sys.exit(main())

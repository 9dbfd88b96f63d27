import sys

from dglimit.cli import main

sys.exit(main())

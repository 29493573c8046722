import sys

from hierarb.cli import main

sys.exit(main())

import sys

from binoether.cli import main

sys.exit(main())

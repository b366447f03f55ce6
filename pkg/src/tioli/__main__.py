import sys

from tioli.harness.cli import main

sys.exit(main())

import sys

from htdp.harness.cli import main

sys.exit(main())

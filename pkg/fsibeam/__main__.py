import sys

from .fsi_cli import main

sys.exit(main())

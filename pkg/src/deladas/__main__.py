import sys

from deladas.cli import main

sys.exit(main())

import sys

from invfem.cli import main

sys.exit(main())

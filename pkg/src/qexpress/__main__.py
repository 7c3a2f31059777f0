import sys

from qexpress.cli import main

sys.exit(main())

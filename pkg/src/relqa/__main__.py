import sys

from relqa.cli import main

sys.exit(main())

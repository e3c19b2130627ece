import sys

from hamlab.cli import main

sys.exit(main())

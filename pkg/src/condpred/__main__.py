import sys

from condpred.cli import main

sys.exit(main())

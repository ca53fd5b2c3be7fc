"""Allow ``python -m credibility``."""

import sys

from .cli import main

sys.exit(main())

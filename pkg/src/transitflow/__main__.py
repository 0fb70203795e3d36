"""Module execution entry point: python -m transitflow ..."""

import sys

from .cli import main

sys.exit(main())

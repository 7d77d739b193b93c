"""Allow ``python -m prefixsynth``."""
import sys

from .cli import main

sys.exit(main())

import sys

from ssrgan.cli import main

sys.exit(main())

import sys

from cwseg.cli import main

sys.exit(main())

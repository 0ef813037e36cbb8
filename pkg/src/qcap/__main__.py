"""Module entry point so ``python -m qcap`` behaves like the console script."""
from .cli import main

raise SystemExit(main())

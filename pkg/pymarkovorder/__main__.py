"""Entry point for ``python -m pymarkovorder``."""
from pymarkovorder.cli import main

if __name__ == "__main__":
    raise SystemExit(main())

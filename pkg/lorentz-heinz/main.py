"""Entry point for the Lorentz graph toolkit"""
import sys

from lorentz_heinz.cli import main

if __name__ == "__main__":
    sys.exit(main())

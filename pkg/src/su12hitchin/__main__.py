"""Run the command-line interface with ``python -m su12hitchin``."""

from .cli import main

if __name__ == "__main__":
    main()

"""Main entry point for decoupling_lab module."""

from decoupling_lab.cli import main

if __name__ == "__main__":
    main()

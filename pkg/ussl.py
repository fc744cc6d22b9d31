"""Command-line entry point (same as the installed `ussl` script)."""

from app.cli.main import main

if __name__ == "__main__":
    main()

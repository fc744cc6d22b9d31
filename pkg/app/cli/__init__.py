"""Command-line entry layer: `ussl <subcommand>`."""

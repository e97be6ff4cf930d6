"""Entry point for python -m taskpart."""

from taskpart.cli import app

if __name__ == "__main__":
    app()

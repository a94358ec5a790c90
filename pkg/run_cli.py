# run_cli.py
import sys

from cli_app.cli import main

if __name__ == "__main__":
    sys.exit(main())

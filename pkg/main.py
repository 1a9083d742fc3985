"""
binoether - non-Noether symmetry verification
Entry point: python main.py <command> [options]
"""

import sys

from dotenv import load_dotenv

# Load environment variables before settings are imported
load_dotenv()

from binoether.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())

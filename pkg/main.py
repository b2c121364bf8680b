"""Main application entry point for game-lab.

This is a simple wrapper that imports and runs the CLI.
For the full CLI implementation, see src/game_lab/cli.py
"""

import sys
from pathlib import Path

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent / "src"))

from game_lab.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())

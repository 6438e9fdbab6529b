import sys
from pathlib import Path

# make the src layout importable without an install
sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

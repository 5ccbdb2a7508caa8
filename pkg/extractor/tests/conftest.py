import sys
from pathlib import Path

# run from a bare checkout: extractor sources plus the clustering package
HERE = Path(__file__).resolve().parent
for src in (HERE.parent / "src", HERE.parent.parent / "src"):
    if str(src) not in sys.path:
        sys.path.insert(0, str(src))

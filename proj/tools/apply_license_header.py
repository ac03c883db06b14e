#!/usr/bin/env python3
"""Prepends cmake/license_header.txt to every C++ source in the project.

Idempotent: files that already start with the header are left alone.
"""
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent
DIRS = ["core", "tools", "tests", "verify", "benchmarks"]
SUFFIXES = {".cpp", ".hpp", ".h", ".cc"}


def main() -> int:
    header = (ROOT / "cmake" / "license_header.txt").read_text().rstrip("\n") + "\n\n"
    changed = 0
    for d in DIRS:
        for path in sorted((ROOT / d).rglob("*")):
            if path.suffix not in SUFFIXES or not path.is_file():
                continue
            text = path.read_text()
            if text.startswith(header):
                continue
            path.write_text(header + text)
            changed += 1
    print(f"header added to {changed} files")
    return 0


if __name__ == "__main__":
    sys.exit(main())

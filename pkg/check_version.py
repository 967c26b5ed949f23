#!/usr/bin/env python3
"""
Version Consistency Checker

Checks that the version in pyproject.toml, the package __init__ and the
latest CHANGELOG entry agree. Run this before tagging a release.
"""

import re
import sys
from pathlib import Path

VERSION_FILE_PATTERNS = {
    "pyproject.toml": (
        r'(?m)^version\s*=\s*"([^"]+)"',
        "pyproject.toml version"
    ),
    "src/fastcp/__init__.py": (
        r'__version__\s*=\s*"([^"]+)"',
        "__init__.py version"
    ),
}

CHANGELOG_PATTERN = r'##\s+\[([^\]]+)\]\s+-\s+\d{4}-\d{2}-\d{2}'


def extract_version(file_path, pattern):
    """Extract version string from a file using regex pattern."""
    try:
        match = re.search(pattern, Path(file_path).read_text())
        return match.group(1) if match else None
    except FileNotFoundError:
        return None


def collect_versions(project_root):
    """
    Versions found per file, and the files where none was found.

    The CHANGELOG contributes its most recent release heading.
    """
    project_root = Path(project_root)
    versions = {}
    missing = []
    for file_path, (pattern, _) in VERSION_FILE_PATTERNS.items():
        version = extract_version(project_root / file_path, pattern)
        if version:
            versions[file_path] = version
        else:
            missing.append(file_path)

    version = extract_version(project_root / "CHANGELOG.md", CHANGELOG_PATTERN)
    if version:
        versions["CHANGELOG.md"] = version
    else:
        missing.append("CHANGELOG.md")
    return versions, missing


def check_versions(project_root=None):
    """Check version consistency across all files."""
    project_root = Path(project_root or Path(__file__).parent)
    print("Checking version consistency...\n")

    versions, missing = collect_versions(project_root)
    for file_path, version in versions.items():
        print(f"✓ {file_path:50s} {version}")
    for file_path in missing:
        print(f"✗ Could not find version in {file_path}")

    print("\n" + "=" * 70)
    canonical = versions.get("pyproject.toml")
    if not canonical:
        print("ERROR: Could not find version in pyproject.toml (canonical source)")
        return 1
    print(f"\nCanonical version (pyproject.toml): {canonical}")

    inconsistencies = [
        f"  ✗ {file_path}: {version} (expected: {canonical})"
        for file_path, version in versions.items()
        if version != canonical
    ]
    if inconsistencies:
        print("\nINCONSISTENCIES FOUND:")
        print("\n".join(inconsistencies))
        print("\nPlease update all version numbers to match pyproject.toml")
        return 1
    if missing:
        return 1

    print("\n✓ All versions are consistent!")
    return 0


if __name__ == "__main__":
    sys.exit(check_versions())

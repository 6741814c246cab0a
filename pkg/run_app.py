#!/usr/bin/env python3
"""
Simple script to run the toolkit locally.
Without arguments it starts the fixture translation server; any arguments
are passed to the command line (e.g. `python run_app.py grid`).
"""

import sys

from app.cli import main


def run():
    argv = sys.argv[1:]
    if not argv:
        print("🚀 Starting fixture translation server on http://127.0.0.1:8000...")
        print("📖 API docs available at: http://127.0.0.1:8000/docs")
        print("🏥 Health check at: http://127.0.0.1:8000/health")
        print("🔑 Set FIXTURE_TABLE in your .env file to choose the served translations")
        print("\n💡 Run `python run_app.py --help` for the experiment commands")
        print("=" * 50 + "\n")
        argv = ["serve"]
    return main(argv)


if __name__ == "__main__":
    sys.exit(run())

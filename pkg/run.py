"""Run the fairbits CLI.

Usage example:
    python run.py bias-table --w 32 --m 1000000 --format csv
    python run.py sample --n 10 --k 10 --seed 1
"""
import sys

from fairbits.cli import main


if __name__ == '__main__':
    sys.exit(main(sys.argv[1:]))

import sys

from robot_ot.cli import main


if __name__ == "__main__":
    sys.exit(main())

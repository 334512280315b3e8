import sys
from typing import List

from hubsync.commands_utils import execute_command, get_command_list


def run(argv: List[str]) -> int:
    """Runs one hubsync command line and returns its exit code."""
    return execute_command(get_command_list(), list(argv))


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()

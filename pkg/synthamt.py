"""Synthamt CLI entrypoint."""


# Imports
import argparse
import logging
import sys

from lib import logger, subcommands


def main(argv=None):
    """Parse argv and run the appropriate action."""
    # Configure argument parser
    parser = argparse.ArgumentParser()
    parser.add_argument(
        '--debug',
        action='store_true',
        help='Print additional debug information while running.',
    )
    subcommands.init_argparse_action(parser.add_subparsers(
        dest='subcommand',
        title='Synthamt Subcommands',
        description='These commands cover rendering, training, '
                    'transcription and evaluation.',
        help='Run one of these commands to get started.',
        required=True,
    ))

    # Parse args
    args = parser.parse_args(argv)

    # Run (requires subparsers to set a default run function)
    if args.debug:
        logger.setLevel(logging.DEBUG)
    try:
        args.run(args)
    except Exception:
        logger.exception(f'{args.subcommand} failed.')
        sys.exit(1)


if __name__ == '__main__':
    main()

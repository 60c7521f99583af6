#!/usr/bin/env python3
import logging
import os
import sys

import translation
from version import VERSION


def main(argv) -> int:
    translation.install(os.environ.get("MRTIME_LANG", "en"))

    from cli.commands import UsageError, build_parser
    from mrtime.errors import MrTimeError

    parser = build_parser(VERSION)
    args = parser.parse_args(argv)
    translation.install(args.lang)

    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s: %(message)s",
        force=True,
    )
    logger = logging.getLogger("mrtime")

    try:
        return args.handler(args)
    except UsageError as err:
        logger.error("%s", err)
        return 2
    except MrTimeError as err:
        if err.hint:
            logger.error("%s (%s)", err, err.hint)
        else:
            logger.error("%s", err)
        return 1
    except (ValueError, OSError) as err:
        logger.error("%s", err)
        return 1


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))

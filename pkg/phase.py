#!/usr/bin/env python3 -u
# Copyright (c) The phasekit authors.
#
# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

import sys

from phasekit.cli import create_parser, main


if __name__ == "__main__":
    parser = create_parser()
    args = parser.parse_args()
    sys.exit(main(args))

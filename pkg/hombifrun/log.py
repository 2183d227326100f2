# hombif runner logging configuration.
# Copyright (C) 2024 hombif authors
#
# This program is free software; you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation; either version 2 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License along
# with this program; if not, write to the Free Software Foundation, Inc.,
# 51 Franklin Street, Fifth Floor, Boston, MA 02110-1301 USA.

import os
import logging


def get_logger(loggername, config):
    """
    Logger writing to <out>/main.log and stderr.  The library modules log
    below the 'hombif' logger, so configuring that one covers them too.
    """
    if 'BUILD_MANPAGES_RUNNING' in os.environ:
        return None
    log = logging.getLogger(loggername)
    for handler in list(log.handlers):
        log.removeHandler(handler)
        handler.close()
    loglevel = logging.getLevelName(config['loglevel'].upper())
    os.makedirs(config.out, exist_ok=True)
    logfile = os.path.join(config.out, 'main.log')
    log.setLevel(loglevel)
    file_formatter = logging.Formatter(
        "%(levelname)5s %(asctime)s "
        "PID:%(process)d:%(thread)d(%(threadName)s) "
        "%(message)s")
    main_file = logging.FileHandler(logfile)
    main_file.setLevel(loglevel)
    main_file.setFormatter(file_formatter)
    log.addHandler(main_file)
    stderr = logging.StreamHandler()
    stderr.setLevel(loglevel)
    log.addHandler(stderr)
    return log

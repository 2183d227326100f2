# hombif runner application context.
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

from contextlib import contextmanager

from hombif.helpers import HombifError
from hombifrun.config import parse_config
from hombifrun.log import get_logger
from hombifrun.report import Artifacts


class AppContext:
    """
    Provide a singleton-like behavior for object attributes.  One needs to
    define instantiate_* methods.
    """
    def __init__(self):
        self._instantiated = {}

    # pylint: disable=missing-function-docstring
    def __getattr__(self, key):
        if key.startswith("instantiate_"):
            raise KeyError("Please define {} method in AppContext".format(key))
        setattr(self, key, getattr(self, "instantiate_{}".format(key))())
        self._instantiated[key] = True
        return getattr(self, key)

    @staticmethod
    def instantiate_config():
        return parse_config()

    def instantiate_log(self):
        return get_logger("hombif", self.config)

    def instantiate_system(self):
        return self.config.system_spec()

    def instantiate_artifacts(self):
        return Artifacts(self.config.out)

    def configure(self, config):
        """ Start over with CONFIG instead of the environment's one """
        self.reset()
        self.config = config
        self._instantiated['config'] = True

    def reset(self):
        for key in list(self._instantiated.keys()):
            delattr(self, key)
            del self._instantiated[key]

app = AppContext()

@contextmanager
def artifact_scope(command):
    """
    Provide the artifact writer for COMMAND.  The MANIFEST is flushed in any
    case; it is marked incomplete and error.json is added when the command
    fails.
    """
    artifacts = app.artifacts
    try:
        yield artifacts
    except HombifError as err:
        data = err.to_dict()
        data['exit_code'] = err.exit_code
        artifacts.write_json('error.json', data)
        artifacts.write_manifest(command, complete=False)
        raise
    except Exception:
        artifacts.write_manifest(command, complete=False)
        raise
    artifacts.write_manifest(command, complete=True)

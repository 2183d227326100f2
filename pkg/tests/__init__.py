"""
hombif test-suite.
"""

import os
import shutil
import tempfile
from unittest import mock  # pylint: disable=unused-import

import numpy as np

from hombifrun.app import app


def rotation(angle):
    return np.array([[np.cos(angle), -np.sin(angle)],
                     [np.sin(angle), np.cos(angle)]])


class HombifTestCase:
    """
    Basic test class.  Prepares the temporary output directory and points
    HOMBIF_CONFIG to an (initially empty) config file in there.
    """

    workdir = None
    config_file = None

    def setup_method(self, method):
        """ Executed before each test-case """
        _unused = method
        self.workdir = tempfile.mkdtemp(prefix="/tmp/hombif-tests-")
        app.reset()

        confdir = os.path.join(self.workdir, "etc")
        os.makedirs(confdir)
        self.config_file = os.path.join(confdir, "run.yaml")
        os.environ["HOMBIF_CONFIG"] = self.config_file
        self.write_config()

    def teardown_method(self, method):
        """ Executed after each test-case """
        _unused = method
        shutil.rmtree(self.workdir)
        os.environ.pop("HOMBIF_CONFIG", None)
        app.reset()

    @property
    def outdir(self):
        return os.path.join(self.workdir, "out")

    def write_config(self, *lines):
        """ Store LINES into the config file, 'out' is always set """
        with open(self.config_file, 'w') as cfd:
            cfd.write(os.linesep.join(
                ["out: {0}".format(self.outdir)] + list(lines)) + os.linesep)

# hombif setup script.
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

from setuptools import setup, find_packages

# For the manual pages generator.
from build_manpages import build_manpages, get_build_py_cmd, get_install_cmd

from hombif import __version__

project = "hombif"
datadir = "share"
pkgdatadir = datadir + "/" + project

def get_requirements():
    with open('requirements.txt') as f:
        return f.read().splitlines()

long_description="""
Homoclinic bifurcation toolkit: Evans function scans, parity certificates and
branch continuation for nonautonomous Caratheodory equations.
""".strip()

setup(
    name=project,
    version=__version__,
    description='Detection and continuation of homoclinic bifurcations',
    long_description=long_description,
    license='GPLv2+',
    platforms=['any'],
    packages=find_packages(exclude=('tests',)),
    data_files=[
        (pkgdatadir, ['config/run.yaml']),
    ],
    scripts=['bin/hombif'],
    install_requires=get_requirements(),
    cmdclass={
        'build_manpages': build_manpages,
        'build_py': get_build_py_cmd(),
        'install': get_install_cmd(),
    },
)

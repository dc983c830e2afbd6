#!/usr/bin/env python
# -*- coding: utf-8 -*-

import os
try:
    from setuptools import setup
    setup
except ImportError:
    from distutils.core import setup
    setup


setup(
    name="RiskStop",
    version="1.0",
    packages=["riskstop"],
    license="LICENSE",
    description="Optimal stopping of an insurance risk reserve with invested capital",
    long_description=open("README.md").read(),
    package_data={"": ["README.md", "LICENSE"]},
    include_package_data=True,
    install_requires=["numpy", "scipy", "h5py"],
    extras_require={"test": ["pytest"]},
    entry_points={"console_scripts": ["riskstop=riskstop.cli:main"]},
)

# write top level __init__.py file with the absolute path to the package repo
toplevelstr = ("""import os

try:
    from ._version import __version__
except(ImportError):
    pass

"""
)

with open('riskstop/__init__.py','w') as ff:
  ff.write(toplevelstr)
  ff.write("""__abspath__ = '{0}/'\n""".format(os.getcwd()))

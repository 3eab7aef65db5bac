#!/usr/bin/env python3
# Copyright (c) 2026 The riseff Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
# implied.
# See the License for the specific language governing permissions and
# limitations under the License.

from setuptools import setup, find_packages

from riseff import __version__ as version


name = 'riseff'


setup(
    name=name,
    version=version,
    description='Energy-efficiency simulator for RIS-aided D2D networks',
    license='Apache License (2.0)',
    author='The riseff Authors',
    packages=find_packages(exclude=['test_riseff', 'test_riseff.*', 'bin']),
    test_suite='test_riseff',
    classifiers=[
        'Development Status :: 4 - Beta',
        'License :: OSI Approved :: Apache Software License',
        'Operating System :: POSIX :: Linux',
        'Programming Language :: Python :: 3',
        'Topic :: Scientific/Engineering',
        ],
    python_requires='>=3.8',
    install_requires=['numpy>=1.20', 'scipy>=1.5', 'swift'],
    scripts=['bin/riseff-sweep'],
    )

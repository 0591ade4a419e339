#!/usr/bin/env python
from setuptools import setup

classifiers = ['Development Status :: 4 - Beta',
               'Environment :: Console',
               'Intended Audience :: Science/Research',
               'License :: OSI Approved :: Apache Software License',
               'Topic :: Scientific/Engineering :: Physics']

setup(name='wdmqkd',
      version='0.1.0',
      description='simulator and key analysis for wavelength-multiplexed entanglement-based QKD links',
      long_description=None,
      classifiers=classifiers,
      keywords='qkd quantum key distribution spdc dwdm dispersion compensation finite key timetag coincidence',
      author='wdmqkd developers',
      license='http://www.apache.org/licenses/LICENSE-2.0',
      packages=['wdmqkd'],
      package_data={'wdmqkd': ['presets/*.cfg', 'presets/*.json']},
      include_package_data=True,
      zip_safe=False,
      install_requires=['tornado>=4.0.0', 'valideer>=0.3.1', 'numpy>=1.17', 'scipy>=1.4', 'numba>=0.50'],
      extras_require={'test': ['ddt', 'pytest']},
      entry_points={'console_scripts': ['wdmqkd = wdmqkd.cli:main']})

import sys
from setuptools import setup, find_packages
from fsibeam import __version__

if sys.version_info < (3, 10):
    sys.exit('Sorry, Python < 3.10 is not supported.')

with open("README.md", "r") as fh:
    long_description = fh.read()

setup(
    name="fsibeam",
    packages=find_packages(exclude=['tests', 'tests.*']),
    version=__version__,
    license="GPL",
    description="Channel flow over a damped clamped elastic beam: MAC Navier-Stokes/beam coupling "
                "with Bernoulli inflow/outflow and a slab-wise Picard iteration",
    long_description=long_description,
    long_description_content_type="text/markdown",
    author="fsibeam developers",
    author_email="",
    url="",
    download_url="",
    keywords=['fluid-structure interaction', 'Navier-Stokes', 'Euler-Bernoulli beam', 'MAC grid',
              'Bernoulli pressure', 'fixed point', 'CFD'],
    install_requires=['numpy', 'scipy', 'matplotlib', 'tomli; python_version < "3.11"', 'tomli-w'],
    entry_points={'console_scripts': ['fsibeam=fsibeam.fsi_cli:main']},
    test_suite='tests',
    classifiers=[
          'Development Status :: 3 - Alpha',
          'Intended Audience :: Education',
          'Intended Audience :: Science/Research',
          'License :: OSI Approved :: GNU General Public License v3 (GPLv3)',
          'Operating System :: Microsoft :: Windows',
          'Operating System :: POSIX :: Linux',
          'Programming Language :: Python',
          'Topic :: Education',
          'Topic :: Scientific/Engineering :: Physics',
          'Topic :: Scientific/Engineering :: Mathematics'
    ]
)

import re
from codecs import open
from os import path

from setuptools import setup

here = path.abspath(path.dirname(__file__))


def strip(line):
    """Drop the comment and surrounding blanks of a requirements line."""
    return line.split('#', 1)[0].strip()


def requirements_from_file(*parts):
    """List the requirements in the pip file at ``here/<parts>``."""
    with open(path.join(here, *parts), 'r', 'utf-8') as fd:
        return [strip(line) for line in fd if strip(line)]


def long_description(github_url):
    """README with its relative links pointing at the repository."""
    with open(path.join(here, 'README.rst'), 'r', 'utf-8') as fd:
        readme = fd.read()
    return re.sub(r'`<([^>]*)>`__',
                  r'`\1 <' + github_url + r'/blob/main/\1>`__',
                  readme)


about = {}
with open(path.join(here, 'gripsim', '__version__.py'),
          'r', 'utf-8') as fd:
    exec(fd.read(), about)

setup(
    name=about['__title__'].lower(),
    version=about['__version__'],
    description=about['__description__'],
    long_description=long_description(about['__github_url__']),
    long_description_content_type='text/x-rst',
    url=about['__url__'],
    project_urls={
        'Source': about['__github_url__'],
    },
    license=about['__license__'],

    python_requires='>=3.9',
    classifiers=[
        'License :: OSI Approved :: MIT License',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3 :: Only',
        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering',
    ],

    packages=['gripsim'],
    # scenario fixtures are read by the tests and the tutorial
    package_data={'gripsim': ['scenarios/*.scenario']},

    install_requires=requirements_from_file('requirements.txt'),
    extras_require={
        'test': requirements_from_file('tests', 'requirements.txt'),
    },
    entry_points={
        'console_scripts': ['gripsim = gripsim.cli:main'],
    },
)

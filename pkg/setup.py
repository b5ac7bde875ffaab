#!/usr/bin/env python
# coding=utf-8

"""The setup script."""
import ast

from setuptools import find_packages, setup

with open("pskt/__init__.py") as f:
    for line in f:
        if line.startswith("__version__"):
            version = ast.parse(line).body[0].value.s  # type: ignore
            break

with open("README.rst") as readme_file:
    readme = readme_file.read()


setup(
    author="PolySketch Toolkit developers",
    python_requires=">=3.8",
    classifiers=[
        "Development Status :: 2 - Pre-Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: Apache Software License",
        "Natural Language :: English",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
    ],
    entry_points={
        "console_scripts": [
            "psk=pskt.cli.main:main",
        ],
    },
    description="PSKT (PolySketch Toolkit) implements polynomial sketches and linear-time causal polynomial attention.",
    install_requires=[
        "numpy>=1.20",
        "scipy>=1.6",
        "pydantic>=2.0",
    ],
    license="Apache Software License 2.0",
    long_description=readme,
    long_description_content_type="text/x-rst",
    include_package_data=True,
    keywords="pskt",
    name="pskt",
    packages=find_packages(include=["pskt", "pskt.*"]),
    test_suite="tests",
    extras_require={
        "dev": [
            "pytest",
            "pytest-mock",
            "hypothesis",
            "sphinx_copybutton",
            "numpydoc",
            "myst_parser",
            "sphinx-book-theme",
            "pylint",
        ],
    },
    version=version,
    zip_safe=False,
)

import os

from setuptools import setup

long_description = open("README.md", "r").read()

package_root = os.path.abspath(os.path.dirname(__file__))

version = {}
with open(os.path.join(package_root, "debiased_polyfit/version.py")) as fp:
    exec(fp.read(), version)
version = version["__version__"]

setup(
    name="debiased-polyfit",
    version=version,
    packages=["debiased_polyfit"],
    package_data={"debiased_polyfit": ["py.typed"]},
    setup_requires=["wheel"],
    install_requires=[
        "pydantic>=2.0.2,<3.0.0",
        "pymongo>=4.3,<5.0",
        "numpy>=1.22",
        "scipy>=1.9",
        "matplotlib>=3.5",
    ],
    entry_points={
        "console_scripts": ["debiased-polyfit = debiased_polyfit.cli:main"],
    },
    description="Unbiased polynomial regression from random matrix eigenvalues",
    long_description=long_description,
    long_description_content_type="text/markdown",
    license="MIT",
    classifiers=[
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    python_requires=">=3.8",
)

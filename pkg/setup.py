"""Setup script for the sasv package.

    Usage: pip install .
"""
from setuptools import setup
from sasv import __version__

DESCRIPTION = "sasv - spoofing-aware speaker verification experiments"

LONG_DESCRIPTION = """
sasv is a python package for training and evaluating spoofing-aware
speaker verification (SASV) systems.

A SASV system accepts a trial only when the test utterance is genuine
speech from the enrolled speaker.  Both zero-effort impostors and
spoofed speech (text-to-speech and voice conversion attacks) must be
rejected, with one score per trial.

The package generates synthetic datasets shaped like the ASVspoof 2019
LA corpus, trains a fused embedding with a countermeasure head, a
bonafide-masked AAM-softmax speaker head, adversarial spoof-source heads
and a spoof-source triplet loss, and reports the SASV-EER, SV-EER and
SPF-EER of trained models and of the score-sum fusion baseline.  All
numerics are numpy; there is no GPU or deep learning framework involved."""

required = ["numpy>=1.21",
            "scipy>=1.7",
            "pint>=0.23",
            "pandas>=2.0"]

setup(
    name="sasv",
    version=__version__,
    author="SASV Developers",
    author_email="sasv-dev@users.noreply.github.com",
    description=DESCRIPTION,
    long_description=LONG_DESCRIPTION,
    license="BSD",
    packages=["sasv"],
    package_data={"sasv": ["py.typed"]},
    python_requires=">=3.8",
    extras_require={"test": ["pytest", "mypy==1.3.0"]},
    install_requires=required,
    entry_points={"console_scripts": ["sasv = sasv.Cli:main"]},
    classifiers=[
        "Development Status :: 3 - Alpha",
        "License :: OSI Approved :: BSD License",
        "Operating System :: OS Independent",
        "Programming Language :: Python",
        "Intended Audience :: Science/Research",
        "Topic :: Multimedia :: Sound/Audio :: Speech",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
    ],
)

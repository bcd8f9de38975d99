# -*- coding: utf-8 -*-

import os
from setuptools import setup, find_packages

PACKAGES = find_packages(exclude=["tests", "tests.*"])

with open("requirements.txt") as f:
    install_requires = [line.strip() for line in f if line.strip() and not line.startswith("#")]

# Get version and release info, which is all stored in fracshe/version.py
ver_file = os.path.join("fracshe", "version.py")
with open(ver_file) as f:
    exec(f.read())

opts = dict(
    name=NAME,
    maintainer=MAINTAINER,
    maintainer_email=MAINTAINER_EMAIL,
    description=DESCRIPTION,
    long_description=LONG_DESCRIPTION,
    url=URL,
    download_url=DOWNLOAD_URL,
    license=LICENSE,
    classifiers=CLASSIFIERS,
    author=AUTHOR,
    author_email=AUTHOR_EMAIL,
    platforms=PLATFORMS,
    version=VERSION,
    packages=PACKAGES,
    python_requires=">=3.9",
    install_requires=install_requires,
    extras_require={"test": ["pytest", "packaging"]},
    scripts=SCRIPTS,
    include_package_data=True,
)


if __name__ == "__main__":
    setup(**opts)

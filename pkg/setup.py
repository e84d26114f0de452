# Copyright (c) The phasekit authors.
#
# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

from setuptools import setup


with open("phasekit/version.py") as infile:
    exec(infile.read())


setup(
    name="phasekit",
    version=version,
    description="Window-minimised phase uncertainty of periodic quantum states.",
    license="MIT",
    packages=["phasekit"],
    scripts=["phase.py"],
    python_requires=">=3.8",
    install_requires=["torch>=1.8", "numpy", "scipy"],
    extras_require={"tests": ["pytest", "hypothesis"]},
    data_files=[("source_docs/phasekit", ["LICENSE", "README.md"])],
    zip_safe=True,
)

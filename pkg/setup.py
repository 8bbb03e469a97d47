import setuptools

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

setuptools.setup(
    name="skipfree",
    version="0.1.0",
    author="skipfree contributors",
    description="Exact policy-improvement solver for skip-free Markov decision processes on trees",
    long_description=long_description,
    long_description_content_type="text/markdown",
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    package_dir={"": "src"},
    packages=setuptools.find_packages(where="src"),
    install_requires=[
        "numpy>=1.21",
        "scipy>=1.7",
    ],
    entry_points={
        "console_scripts": [
            "skipfree=skipfree.controller:main",
        ],
    },
    python_requires=">=3.8",
)

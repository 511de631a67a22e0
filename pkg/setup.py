import setuptools

with open("README.md", "r") as fh:
    long_description = fh.read()

setuptools.setup(
    name="chance-presolve",
    version="1.0.0",
    description="Exact solver and presolve for chance-constrained "
                "programs with finitely many scenarios in dimension 2 and 3. "
                "Geometric certificates fix the scenarios that are safe or "
                "pruned, big-M values are tightened and valid inequalities "
                "are generated; a branch-and-bound solver and a brute-force "
                "enumeration of minimal subsets compute the optimum. "
                "Benchmark tables export to text, CSV, Markdown and Excel.",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=setuptools.find_packages(exclude=("tests",)),
    install_requires=['numpy', 'scipy', 'XlsxWriter'],
    entry_points={
        "console_scripts": ["ccp=chance_presolve.cli:main"],
    },
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
    python_requires='>=3.8',
)

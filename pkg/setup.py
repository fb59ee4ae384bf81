import setuptools
import os


def read(fname):
    return open(os.path.join(os.path.dirname(__file__), fname)).read()


setuptools.setup(
    name="filab",
    version="0.1.0",
    author="Ayoub Benaissa",
    author_email="ayouben9@gmail.com",
    install_requires=[r for r in read("requirements.txt").split("\n") if r],
    description="Log-Sobolev constants, curvature and inequality checks for finite Markov chains",
    long_description=read("README.md"),
    long_description_content_type="text/markdown",
    keywords="markov chains log-sobolev inequality curvature optimal transport",
    classifiers=[
        "Programming Language :: Python :: 3",
        "Operating System :: OS Independent",
    ],
    packages=setuptools.find_packages(include=["filab", "filab.*"]),
    python_requires=">=3.8",
    tests_require=["pytest", "hypothesis"],
    extras_require={"test": ["pytest", "hypothesis"]},
    entry_points={"console_scripts": ["filab = filab.__main__:run_cli",]},
    license="GPL3",
)

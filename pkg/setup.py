"""Setup script for the game-lab package."""

from pathlib import Path

from setuptools import find_packages, setup

# Read the contents of README file
this_directory = Path(__file__).parent
long_description = (this_directory / "README.md").read_text(encoding="utf-8")

# Read requirements
with open(this_directory / "requirements.txt", "r", encoding="utf-8") as f:
    requirements = [line.strip() for line in f if line.strip() and not line.startswith("#")]

about = {}
exec((this_directory / "src" / "game_lab" / "__about__.py").read_text(encoding="utf-8"), about)

setup(
    name=about["__title__"],
    version=about["__version__"],
    author=about["__author__"],
    author_email=about["__author_email__"],
    description=about["__description__"],
    long_description=long_description,
    long_description_content_type="text/markdown",
    url=about["__url__"],
    project_urls={
        "Bug Reports": f"{about['__url__']}/issues",
        "Source": about["__url__"],
    },
    packages=find_packages(where="src"),
    package_dir={"": "src"},
    classifiers=about["__classifiers__"],
    python_requires=about["__python_requires__"],
    install_requires=requirements,
    extras_require={
        "dev": [
            "pytest>=7.0.0",
            "pytest-cov>=4.0.0",
            "pytest-mock>=3.10.0",
            "black>=23.0.0",
            "isort>=5.12.0",
            "flake8>=6.0.0",
            "mypy>=1.0.0",
        ],
    },
    entry_points={
        "console_scripts": [
            "game-lab=game_lab.cli:cli_main",
        ],
    },
    keywords=" ".join(about["__keywords__"]),
    zip_safe=False,
)

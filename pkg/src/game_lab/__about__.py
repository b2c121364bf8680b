"""Package metadata for game-lab."""

__title__ = "game-lab"
__version__ = "1.0.0"
__description__ = (
    "Equilibrium, stability and Lyapunov analysis of slotted-ALOHA and "
    "SINR power-control games under symmetric altruism"
)
__author__ = "Game Lab Team"
__author_email__ = "team@game-lab.dev"
__license__ = "MIT"
__url__ = "https://github.com/your-org/game-lab"
__download_url__ = f"{__url__}/archive/v{__version__}.tar.gz"
__keywords__ = [
    "game-theory",
    "aloha",
    "power-control",
    "nash-equilibrium",
    "lyapunov",
    "medium-access",
]
__classifiers__ = [
    "Development Status :: 4 - Beta",
    "Intended Audience :: Science/Research",
    "License :: OSI Approved :: MIT License",
    "Operating System :: OS Independent",
    "Programming Language :: Python :: 3",
    "Programming Language :: Python :: 3.9",
    "Programming Language :: Python :: 3.10",
    "Programming Language :: Python :: 3.11",
    "Programming Language :: Python :: 3.12",
    "Topic :: Scientific/Engineering :: Mathematics",
    "Topic :: System :: Networking",
]
__python_requires__ = ">=3.9"

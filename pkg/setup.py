from setuptools import setup, find_packages
from pathlib import Path

readme = Path(__file__).parent / "README.md"
long_description = readme.read_text(encoding='utf-8') if readme.exists() else ""

setup(
    name="litsynth",
    version="0.1.0",
    description="Local Dense Synthesizer Attention - numpy로 구현한 SA, DSA, LDSA, HA 음성 인코더와 검증 도구",
    long_description=long_description,
    long_description_content_type="text/markdown",
    author="ironwung",
    author_email="ironwung@gmail.com",
    license="AGPL-3.0-or-later",

    packages=find_packages(include=["litsynth", "litsynth.*"]),

    python_requires=">=3.8",
    install_requires=["numpy>=1.22"],
    extras_require={
        'dev': ['pytest>=7.0', 'pytest-cov>=4.0'],
    },

    entry_points={
        'console_scripts': [
            'litsynth=litsynth.__main__:main',
        ],
    },

    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
    ],

    keywords="attention synthesizer conformer speech numpy",
)

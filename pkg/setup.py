from setuptools import setup

with open("README.md", "r") as fh:
    long_description = fh.read()

setup(
    name='sieve_sgd',
    version='0.1',
    description='Sieve-SGD estimation of semiparametric binary choice models.',
    long_description=long_description,
    long_description_content_type="text/markdown",
    classifiers=[
        'Development Status :: 3 - Alpha',
        'License :: OSI Approved :: GNU General Public License v3 (GPLv3)',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
        'Topic :: Scientific/Engineering :: Mathematics',
    ],
    license='GNU GPLv3',
    packages=['sieve_sgd'],
    python_requires='>=3.9',
    install_requires=[
        'joblib',
        'numpy>=1.20',
        'pandas>=1.5',
        'scipy>=1.7',
    ],
    extras_require={
        'test': [
            'pytest',
            'pytest-cov',
            'statsmodels',
        ],
    },
    entry_points={
        'console_scripts': [
            'sieve-sgd=sieve_sgd.cli:run',
        ],
    },
    zip_safe=False)

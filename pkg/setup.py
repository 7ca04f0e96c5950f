from setuptools import setup, find_packages

def parse_requirements(filename):
    lineiter = (line.strip() for line in open(filename))
    return [line for line in lineiter if line and not line.startswith("#")]

reqs = parse_requirements('requirements.txt')

VERSION = '0.1.0'
DESCRIPTION = 'AutoComb: automated comb-sign detection on CT enterography volumes'
LONG_DESCRIPTION = 'AutoComb: intestine masking, GMM wall estimation, Jerman vesselness, iterative neighbourhood enhancement and wall-proximity fusion for detecting the comb sign on abdominal CT.'

setup(
    name="auto_comb",
    version=VERSION,
    description=DESCRIPTION,
    long_description=LONG_DESCRIPTION,
    license='MIT',
    packages=find_packages(exclude=['sanity_check', 'sanity_check.*', 'examples', 'examples.*']),
    install_requires=reqs,
    entry_points={
        'console_scripts': ['autocomb=auto_comb.pipeline.cli:main'],
    },
    keywords='CT enterography, comb sign, vesselness, Jerman filter, Gaussian mixture, NIfTI, medical imaging',
    classifiers= [
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        'License :: OSI Approved :: MIT License',
        "Programming Language :: Python :: 3",
        "Topic :: Scientific/Engineering :: Medical Science Apps.",
    ]
)

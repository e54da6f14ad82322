from setuptools import setup

setup(
    name='clock_engine',
    version='0.1.0',
    description='Simulator of a qubit work-extraction engine driven by a quantum clock and stabilised by energy-harvesting measurements.',
    packages=['clock_engine'],
    install_requires=['numpy', 'scipy', 'python-dotenv', 'tqdm'],
    entry_points={'console_scripts': ['clock_engine = clock_engine.cli:cli']},
)

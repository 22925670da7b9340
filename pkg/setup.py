import os
import shutil
from setuptools import setup, find_packages, Command


class Clean(Command):
    """Custom clean command to tidy up the project root."""
    user_options = []

    def initialize_options(self):
        pass

    def finalize_options(self):
        pass

    def run(self):
        for dir_path in ['build', 'dist', 'govliq.egg-info', 'out']:
            if os.path.isdir(dir_path):
                print(f'Removing directory: {dir_path}')
                shutil.rmtree(dir_path)


setup(
    name="govliq",
    version="0.1.0",
    description="Stock liquidity under corporate governance and noise trading",
    packages=find_packages(include=["model", "modules", "modules.*", "metrics", "utils"]),
    py_modules=["run_sweep"],
    python_requires=">=3.8",
    install_requires=[
        "numpy",
        "scipy",
        "pandas>=1.5",
        "tqdm",
        "easydict",
    ],
    extras_require={"test": ["pytest"]},
    entry_points={"console_scripts": ["govliq=run_sweep:main"]},
    cmdclass={
        "clean": Clean,
    },
)

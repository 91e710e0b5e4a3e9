import setuptools

with open("README.md", "r") as fh:
    long_description = fh.read()

setuptools.setup(
    name="mecjoint",
    version="0.0.1dev",
    description="A simulator of joint edge caching and hybrid single/joint transmission in cloud plus multi-edge "
                "networks.",
    long_description=long_description,
    long_description_content_type="text/markdown",
    include_package_data=True,
    packages=setuptools.find_packages(exclude=['tests']),
    install_requires=[
        "click",
        "numpy",
        "pandas",
        "scipy",
        "torch",
    ],
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
)

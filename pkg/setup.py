from setuptools import find_packages, setup

setup(name="notjsAbsInt", packages=find_packages(include=["notjsAbsInt*"]),
      package_data={"notjsAbsInt": ["corpus/*.njs"]})

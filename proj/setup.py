"""CMake-driven extension build (pybind11 cmake_example pattern).

The C++ core and the `qwell._core` module are configured by the top-level
CMakeLists.txt; this shim drives that build from pip/setuptools and drops
the resulting shared object into the package directory.
"""

import os
import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name: str, sourcedir: str = "") -> None:
        super().__init__(name, sources=[])
        self.sourcedir = os.fspath(Path(sourcedir).resolve())


class CMakeBuild(build_ext):
    def build_extension(self, ext: CMakeExtension) -> None:
        # final location: <prefix>/qwell/_core*.so
        ext_path = Path.cwd() / self.get_ext_fullpath(ext.name)
        prefix = ext_path.parent.parent.resolve()

        build_temp = Path(self.build_temp) / ext.name
        build_temp.mkdir(parents=True, exist_ok=True)

        cfg_args = [
            f"-DPython3_EXECUTABLE={sys.executable}",
            "-DCMAKE_BUILD_TYPE=Release",
            "-DSKBUILD=ON",  # install-layout branch of CMakeLists.txt
        ]
        subprocess.run(
            ["cmake", ext.sourcedir, *cfg_args], cwd=build_temp, check=True
        )
        subprocess.run(
            ["cmake", "--build", ".", "--target", "_core", f"-j{os.cpu_count() or 1}"],
            cwd=build_temp,
            check=True,
        )
        subprocess.run(
            ["cmake", "--install", ".", "--prefix", str(prefix)],
            cwd=build_temp,
            check=True,
        )


setup(
    ext_modules=[CMakeExtension("qwell._core")],
    cmdclass={"build_ext": CMakeBuild},
)

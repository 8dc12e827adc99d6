"""Build the lbcsim._core pybind11 extension by delegating to CMake.

The C++ core, CLI, and tests are all driven by the top-level CMakeLists.txt;
this shim only asks it for the `_core` target and copies the staged module
into the location setuptools expects.  Requires a system `cmake` (>= 3.20)
and a C++20 toolchain on PATH.
"""

import os
import shutil
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
        ext_path = Path.cwd() / self.get_ext_fullpath(ext.name)
        ext_path.parent.mkdir(parents=True, exist_ok=True)

        build_temp = Path(self.build_temp).resolve() / ext.name
        build_temp.mkdir(parents=True, exist_ok=True)

        cfg = "Debug" if self.debug else "Release"
        configure = [
            "cmake",
            ext.sourcedir,
            f"-DCMAKE_BUILD_TYPE={cfg}",
            "-DLBCSIM_BUILD_PYTHON=ON",
            f"-DPYTHON_EXECUTABLE={sys.executable}",
        ]
        subprocess.run(configure, cwd=build_temp, check=True)
        subprocess.run(
            ["cmake", "--build", ".", "--target", "_core", "--parallel"],
            cwd=build_temp,
            check=True,
        )

        # CMake stages the module (plus the package __init__) under
        # <build>/python/lbcsim; pick out the compiled extension and place it
        # where setuptools asked for it.
        staged = sorted((build_temp / "python" / "lbcsim").glob("_core*"))
        modules = [p for p in staged if p.suffix in {".so", ".pyd", ".dylib"}]
        if not modules:
            raise RuntimeError(f"no built _core module found under {build_temp}")
        shutil.copy2(modules[-1], ext_path)


setup(
    ext_modules=[CMakeExtension("lbcsim._core")],
    cmdclass={"build_ext": CMakeBuild},
)

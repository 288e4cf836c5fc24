import os
from glob import glob

from pybind11.setup_helpers import ParallelCompile, Pybind11Extension, build_ext
from setuptools import setup

ParallelCompile("NPY_NUM_BUILD_JOBS").install()


def eigen_include():
    env = os.environ.get("EIGEN3_INCLUDE_DIR")
    if env:
        return env
    for cand in ("/usr/include/eigen3", "/usr/local/include/eigen3"):
        if os.path.isdir(cand):
            return cand
    raise RuntimeError("Eigen3 headers not found; set EIGEN3_INCLUDE_DIR")


ext = Pybind11Extension(
    "dipsim._dipsim",
    sorted(glob("src/*.cpp")) + ["python/bindings.cpp"],
    include_dirs=["include", "vendor", eigen_include()],
    cxx_std=20,
    extra_compile_args=["-pthread"],
    extra_link_args=["-pthread"],
)

setup(ext_modules=[ext], cmdclass={"build_ext": build_ext})

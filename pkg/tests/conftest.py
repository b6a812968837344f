"""
Here should be all fixtures, so that they can be reused by tests.
A fixture is a function which prepares fresh data (object,list,string...) for a test.
"""

import numpy as np
import pytest

from nf4lut import canonical_nf4, quantize_blockwise, write_container
from nf4lut.storage.Container import to_bytes


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run the slow performance checks")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def codebook():
    return canonical_nf4()


@pytest.fixture
def rng():
    # fresh, seeded generator for every test
    return np.random.default_rng(20240601)


@pytest.fixture
def normal_values(rng):
    return rng.standard_normal(10_000, dtype=np.float32)


@pytest.fixture
def quantized(normal_values, codebook):
    return quantize_blockwise(normal_values, codebook)


@pytest.fixture
def container_file(tmp_path, quantized):
    filepath = tmp_path / "weights.nf4"
    with open(filepath, "wb") as f:
        write_container(quantized, f)
    return filepath


@pytest.fixture
def raw_f32_file(tmp_path, normal_values):
    filepath = tmp_path / "weights.f32"
    normal_values.astype("<f4").tofile(filepath)
    return filepath


tensor_size_list = [0, 1, 2, 63, 64, 65, 127, 511, 512, 513, 1000, 1025]


@pytest.fixture(params=tensor_size_list)
def sized_tensor_parametrized(request, rng, codebook):
    # it is parametrized -> a test which uses it runs once per size
    n = request.param
    values = rng.standard_normal(n, dtype=np.float32) * np.float32(rng.uniform(0.01, 100))
    return values, quantize_blockwise(values, codebook)


@pytest.fixture(params=[tensor_size_list[3], tensor_size_list[8], tensor_size_list[11]])
def container_bytes_parametrized(request, rng, codebook):
    values = rng.standard_normal(request.param, dtype=np.float32)
    return to_bytes(quantize_blockwise(values, codebook))


# scales of the decoder equivalence oracle: zero, unit, halves, a small irrational-looking
# value and the float16 maximum
equivalence_scale_list = [0.0, 1.0, 0.5, 3.14159e-3, 6.5504e4]


@pytest.fixture(params=equivalence_scale_list)
def scale_parametrized(request):
    return request.param


@pytest.fixture(params=["float32", "float16"])
def precision_parametrized(request):
    return request.param

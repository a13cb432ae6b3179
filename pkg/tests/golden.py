'''
Pinned reference outputs under test-files/golden
'''

import os

import numpy as np
import pytest

from textspot import TensorMap, read_ptm, write_ptm

GOLDEN_DIR = "test-files/golden"

# Set to 1 to rewrite every pinned file from the current outputs
UPDATE_ENV = "TEXTSPOT_UPDATE_GOLDEN"


def golden_path(name: str) -> str:
    ''' Location of a pinned file, relative to the repository root '''
    return os.path.join(GOLDEN_DIR, name)


def check_golden(name: str, tensor: TensorMap):
    '''
        Compare a tensor bit-exactly against its pinned PTM file.
        A missing file is written from the tensor and the test is skipped.
    '''
    path = golden_path(name)
    if os.environ.get(UPDATE_ENV) == "1" or not os.path.isfile(path):
        write_ptm(path, tensor)
        pytest.skip(f'Pinned new golden file "{path}"')

    expected = read_ptm(path)
    assert tensor.dims == expected.dims
    assert np.array_equal(tensor.array, expected.array)
    assert tensor.to_bytes() == expected.to_bytes()

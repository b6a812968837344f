import os
import numpy as np

from ..core.Errors import RawArrayError

import logging
logger = logging.getLogger(__name__)


class FileUtil:
    @classmethod
    def check_path(cls, path: str, is_file=True, auto_create=True):
        """
        Checks if the directory of the given path exists. If it doesn't and 'auto_create' is True, all the
        folders leading to the path are created.

        Params:
          - (str) path: The path to the file or folder
          - (bool) is_file: If True, path points to a file
                            If False, path points to a folder
          - (bool) auto_create: If True, will automatically create the missing directories.

        Returns True if 'path' exists after the check. Files themselves are never created here, the
        writer creates them.
        """
        dir_path = os.path.dirname(path) if is_file else path
        if dir_path and not os.path.exists(dir_path) and auto_create:
            os.makedirs(dir_path)
            logger.debug(f"Created absolute path: {os.path.abspath(dir_path)}")
        return os.path.exists(path)

    @classmethod
    def is_file_empty(cls, filepath: str):
        """
        Checks if 'filepath' is an empty file. Returns True if the file is empty.
        """
        return os.path.getsize(filepath) == 0

    @classmethod
    def get_file_size(cls, filepath: str, size_delimiter: str = "b"):
        size_delimiter = size_delimiter.lower()
        size_multipliers = {"b": 1, "kb": 1024, "mb": 1024 * 1024, "gb": 1024 * 1024 * 1024}
        if size_delimiter not in size_multipliers:
            raise ValueError(f"Size delimiter {size_delimiter} is not one of {list(size_multipliers)}!")
        if not os.path.isfile(filepath):
            raise FileNotFoundError(f"File at {filepath} does not exist!")
        return os.path.getsize(filepath) / size_multipliers[size_delimiter]

    @classmethod
    def read_raw_array(cls, filepath: str, dtype: str = "<f4", count: int = None) -> np.ndarray:
        """
        Reads a headerless little-endian array. If 'count' is None the element count is inferred from
        the file size, which must then be a whole number of elements.

        Raises RawArrayError if the file size doesn't fit the element size or holds fewer than 'count' elements.
        """
        itemsize = np.dtype(dtype).itemsize
        size = int(cls.get_file_size(filepath))
        if count is None:
            if size % itemsize != 0:
                raise RawArrayError(f"{filepath}: size {size} is not a multiple of the {itemsize}-byte element size")
            count = size // itemsize
        elif count * itemsize > size:
            raise RawArrayError(f"{filepath}: holds {size // itemsize} elements, {count} requested")
        logger.debug(f"Reading {count} x {np.dtype(dtype)} from {filepath}")
        return np.fromfile(filepath, dtype=dtype, count=count)

    @classmethod
    def write_raw_array(cls, array: np.ndarray, filepath: str, dtype: str = None) -> int:
        """
        Writes 'array' as a headerless little-endian array and returns the number of bytes written.
        'dtype' defaults to the little-endian variant of the array's own dtype.
        """
        array = np.asarray(array)
        dtype = dtype if dtype is not None else array.dtype.newbyteorder("<")
        data = array.astype(dtype, copy=False).tobytes()
        cls.check_path(filepath)
        with open(filepath, "wb") as f:
            f.write(data)
        logger.debug(f"Wrote {array.size} elements ({len(data)} bytes) to {filepath}")
        return len(data)

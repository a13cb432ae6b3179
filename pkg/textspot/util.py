''' Helper methods for textspot '''

import os
import tempfile


def atomic_write(path: str, data: bytes | str):
    ''' Write a file by writing a temporary file next to it and renaming it '''
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)

    if isinstance(data, str):
        data = data.encode('utf-8')

    fdesc, tmp_path = tempfile.mkstemp(dir=folder, prefix='.tmp-')
    try:
        with os.fdopen(fdesc, 'wb') as tmp_file:
            tmp_file.write(data)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise

''' This is part of the benchmark scripts. See __init__.py for more details. '''

import os
import sys

from time import localtime, strftime
from typing import Any


class ResultPrinter:
    ''' This lazily creates the results file only when there are results to print '''

    def __init__(self, file_name: str, variables: list[str]):
        self._uid = strftime("%y%m%d-%H%M%S", localtime())
        self._variables = variables
        self._created_file = False
        self._rows = 0
        self._results_fname = file_name

    @property
    def uid(self) -> str:
        ''' Unique id for this benchmark based on the current time '''
        return self._uid

    @property
    def path(self) -> str:
        ''' Location of the CSV file '''
        return self._results_fname

    @property
    def rows(self) -> int:
        ''' Number of results written so far '''
        return self._rows

    def _create_file(self, columns: list[str], constants: dict[str, Any]):
        ''' Create the CSV file and write its header '''
        constants_str = ' '.join(f"{k}={v}" for (k, v) in constants.items())

        folder = os.path.dirname(self._results_fname)
        if folder:
            os.makedirs(folder, exist_ok=True)

        try:
            with open(self._results_fname, 'w', encoding='utf-8') as results_file:
                # write command line arguments and csv header
                results_file.write(f"# command: {' '.join(sys.argv)}\n")
                # write constants as another command
                results_file.write(f'# constants: {constants_str}\n')
                results_file.write("# ----------------------------- \n")
                results_file.write(', '.join(['uid'] + columns) + '\n')
        except OSError as err:
            raise OSError(f'Failed to create results file at "{self._results_fname}": '
                          f'{err}') from err

        self._created_file = True

    def print(self, run_id: str, params: dict[str, Any], results: dict[str, Any]):
        ''' Append one result row; non-variable params go into the header once '''
        variables = {key: params[key] for key in self._variables if key in params}
        constants = {key: value for (key, value) in params.items() if key not in variables}

        if not self._created_file:
            self._create_file(list(variables.keys()) + list(results.keys()), constants)

        values = [str(value) for value in list(variables.values()) + list(results.values())]
        with open(self._results_fname, 'a', encoding='utf-8') as results_file:
            results_file.write(f"{run_id}, " + ", ".join(values) + '\n')
            results_file.flush()

        self._rows += 1

''' Logging utilities for textspot '''

import os
import re

from sys import stdout, stderr

from time import strftime, localtime


class RunLogger:
    '''
        Handles logging for a single command invocation.
        Meta messages and errors are always shown, regular messages only
        when verbose is set. Everything also goes to the log file, if any.
    '''

    def __init__(self, log_dir=None, verbose: bool = False, name: str = "textspot"):
        self._name = name
        self._verbose = verbose
        self._log_file = None
        self._path = None

        if log_dir:
            os.makedirs(log_dir, exist_ok=True)
            self._path = f"{log_dir}/{name}.log"
            self._log_file = open(self._path, 'a', encoding='utf-8')

    @property
    def path(self):
        ''' Get the path of the output file (None if only printing) '''
        return self._path

    @property
    def verbose(self) -> bool:
        ''' Are regular messages printed to the console? '''
        return self._verbose

    def log_meta(self, msg):
        ''' Log a message about the progress of the command itself '''
        if len(msg) == 0:
            return  # ignore

        timestr = strftime(f"[{self._name} %H:%M:%S]:", localtime())
        self._log(stdout, f"# {timestr} {msg}", True)

    def log_info(self, msg):
        ''' Log a regular message '''
        if len(msg) == 0:
            return  # ignore

        self._log(stdout, f"[{self._name} I] {msg}", self._verbose)

    def log_error(self, msg):
        ''' Log an error '''
        if len(msg) == 0:
            return  # ignore

        self._log(stderr, f"[{self._name} E] {msg}", True)

    def _log(self, console, line: str, show: bool):
        ''' Write output to console and log file '''

        if show:
            console.write(line + "\n")

        if self._log_file:
            # Remove color codes
            ansi_escape = re.compile(r'\x1B\[[0-?]*[ -/]*[@-~]')
            self._log_file.write(ansi_escape.sub('', line) + "\n")
            self._log_file.flush()

    def close(self):
        ''' Close the log file and stop logging '''
        if self._log_file:
            self._log_file.close()
            self._log_file = None

    def __str__(self):
        return f'Run logger for file "{self._path}"'

''' Error types used by textspot '''


class TensorError(Exception):
    ''' Errors generated by invalid tensor dims or malformed PTM files '''


class GeometryError(Exception):
    ''' Errors generated when constructing or offsetting polygons '''


class AnnotationError(Exception):
    ''' Errors generated when parsing an annotation file '''
    def __init__(self, path: str, line: int, msg: str):
        # args must hold every constructor argument, or unpickling fails
        super().__init__(path, line, msg)
        self._path = path
        self._line = line
        self._message = msg

    @property
    def path(self) -> str:
        ''' The file that contains the malformed line '''
        return self._path

    @property
    def line(self) -> int:
        ''' The (1-based) line number of the malformed line '''
        return self._line

    @property
    def message(self) -> str:
        ''' The error message generated '''
        return self._message

    def __str__(self):
        return f"{self.path}:{self.line}: {self.message}"


class ConfigurationError(Exception):
    ''' Errors generated when parsing a config file or command line override '''


class WeightError(Exception):
    ''' Errors generated when a weight store is missing or has mis-shaped tensors '''


class RecognitionError(Exception):
    ''' Errors generated by the RoI extractor, the charset, or the decoder '''


class LossError(Exception):
    ''' Errors generated when a loss receives invalid inputs '''


# Errors caused by the data a command was given rather than by how it was invoked
DATA_ERRORS = (TensorError, GeometryError, AnnotationError, WeightError,
               RecognitionError, LossError, OSError)

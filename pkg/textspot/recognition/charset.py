''' Symbol tables for transcriptions '''

import string

from typing import Iterable, Sequence

from ..errors import RecognitionError

DEFAULT_SYMBOLS = string.ascii_lowercase + string.digits


class Charset:
    '''
        Maps transcription symbols to ids and back.

        Symbols take ids 0..n-1, followed by EOS, SOS, and PAD.
        Unless case sensitive, input text is lower-cased before lookup.
    '''

    def __init__(self, symbols: Iterable[str], case_sensitive: bool = False):
        symbols = list(symbols)
        if not symbols:
            raise RecognitionError("A charset needs at least one symbol")

        index = {}
        for symbol in symbols:
            if len(symbol) == 0:
                raise RecognitionError("Charset contains an empty symbol")
            if symbol in index:
                raise RecognitionError(f"Charset contains \"{symbol}\" twice")
            index[symbol] = len(index)

        self._symbols = symbols
        self._index = index
        self._case_sensitive = case_sensitive

    @classmethod
    def default(cls) -> 'Charset':
        ''' Lower-case letters and digits; V = 39 '''
        return cls(DEFAULT_SYMBOLS)

    @classmethod
    def from_file(cls, path: str, case_sensitive: bool = False) -> 'Charset':
        ''' One symbol per line, in id order '''
        try:
            with open(path, encoding='utf-8') as charset_file:
                lines = [line.rstrip('\n') for line in charset_file]
        except OSError as err:
            raise RecognitionError(f"Cannot read charset at {path}: {err}") from err

        return cls([line for line in lines if line], case_sensitive=case_sensitive)

    @property
    def symbols(self) -> list[str]:
        ''' The regular symbols, without special ids '''
        return list(self._symbols)

    @property
    def eos(self) -> int:
        ''' End of string '''
        return len(self._symbols)

    @property
    def sos(self) -> int:
        ''' Start of string '''
        return len(self._symbols) + 1

    @property
    def pad(self) -> int:
        ''' Padding '''
        return len(self._symbols) + 2

    @property
    def size(self) -> int:
        ''' V, the number of ids including the special ones '''
        return len(self._symbols) + 3

    def __len__(self):
        return self.size

    def encode(self, text: str, append_eos: bool = True, skip_unknown: bool = False) -> list[int]:
        ''' Convert a transcription to ids '''
        if not self._case_sensitive:
            text = text.lower()

        ids = []
        for symbol in text:
            symbol_id = self._index.get(symbol)
            if symbol_id is None:
                if skip_unknown:
                    continue
                raise RecognitionError(f"Symbol \"{symbol}\" is not in the charset")
            ids.append(symbol_id)

        if append_eos:
            ids.append(self.eos)
        return ids

    def decode(self, ids: Sequence[int]) -> str:
        ''' Convert ids back to text, stopping at the first EOS '''
        result = []
        for symbol_id in ids:
            if symbol_id == self.eos:
                break
            if not 0 <= symbol_id < self.size:
                raise RecognitionError(f"Symbol id {symbol_id} is out of range")
            if symbol_id < len(self._symbols):
                result.append(self._symbols[symbol_id])
        return "".join(result)

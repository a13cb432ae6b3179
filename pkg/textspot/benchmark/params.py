''' This is part of the benchmark scripts. See __init__.py for more details. '''

from typing import Any

from ..errors import ConfigurationError


class ListSteps:
    ''' The values one config key is swept over, as given on the command line '''

    def __init__(self, key: str, steps: list[str]):
        if len(steps) == 0:
            raise ConfigurationError(f'No values given for "{key}"')

        self._steps = tuple(steps)
        self._key = key

    @classmethod
    def parse(cls, assignment: str) -> 'ListSteps':
        ''' Parse `section.key=v1,v2,...` '''
        try:
            key, values = assignment.split('=', 1)
        except ValueError as err:
            raise ConfigurationError(
                f'Invalid sweep. Should be of form "<section>.<key>=<v1>,<v2>,...", '
                f'but was "{assignment}"') from err

        return cls(key.strip(), [value.strip() for value in values.split(',') if value.strip()])

    def key(self) -> str:
        ''' Get the key associated with these steps '''
        return self._key

    @property
    def values(self) -> tuple[str, ...]:
        ''' All values of this sweep '''
        return self._steps


class ParameterSet:
    '''
    Steps through every combination of a list of sweeps.
    The last sweep changes fastest.
    '''

    def __init__(self, steps: list[ListSteps]):
        keys = [step.key() for step in steps]
        if len(set(keys)) != len(keys):
            raise ConfigurationError(f"A key is swept more than once: {keys}")

        self._steps = steps
        # Current position within each sweep; None before the first call
        self._positions: list[int] | None = None
        self._at_end = False

    @property
    def variables(self) -> list[str]:
        ''' The keys that change between configurations '''
        return [step.key() for step in self._steps]

    def next(self) -> dict[str, Any] | None:
        ''' Get the next configuration, or None once all were returned '''
        if self._at_end:
            return None

        if self._positions is None:
            self._positions = [0] * len(self._steps)
        elif not self._advance():
            self._at_end = True
            return None

        if not self._steps:
            # A single empty configuration
            self._at_end = True

        return {step.key(): step.values[pos]
                for (step, pos) in zip(self._steps, self._positions)}

    def _advance(self) -> bool:
        assert self._positions is not None

        for index in reversed(range(len(self._steps))):
            self._positions[index] += 1
            if self._positions[index] < len(self._steps[index].values):
                return True
            self._positions[index] = 0
        return False

    def at_end(self) -> bool:
        ''' Is there another step or are we done? '''
        return self._at_end

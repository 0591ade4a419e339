from functools import wraps

from valideer import parse

from .validators import *


def validated(options=None, extra_options=True):
    """Validates the command line options of a Command before `method` runs.

    The adapted option dict is passed to the method as `options`.
    `options=False` rejects any option set on the command line.
    """
    if type(options) in (dict, str):
        options = parse(options, additional_properties=extra_options)
    elif options not in (None, False):
        raise ValueError('options must be type None, False, or dict')

    def wrapper(method):
        @wraps(method)
        def validate(self, *args, **kwargs):
            given = dict((k, v) for k, v in self.options.items() if v not in (None, '', []))
            if options:
                kwargs['options'] = options.validate(given, adapt=True)

            elif options is False and given:
                raise ValidationError('No options allowed', sorted(given))

            return method(self, *args, **kwargs)

        return validate
    return wrapper

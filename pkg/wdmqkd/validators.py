import re
from numbers import Real

from valideer import *


def _number(value):
    if isinstance(value, bool) or not isinstance(value, Real):
        raise ValidationError("must be a number", value)
    if value != value or value in (float('inf'), float('-inf')):
        raise ValidationError("must be finite", value)
    return float(value)


class positive(Validator):
    name = "positive"

    def validate(self, value, adapt=True):
        number = _number(value)
        if not number > 0:
            raise ValidationError("must be > 0", value)
        return number if adapt else value


class nonnegative(Validator):
    name = "nonnegative"

    def validate(self, value, adapt=True):
        number = _number(value)
        if number < 0:
            raise ValidationError("must be >= 0", value)
        return number if adapt else value


class real(Validator):
    name = "real"

    def validate(self, value, adapt=True):
        number = _number(value)
        return number if adapt else value


class fraction(Validator):
    name = "fraction"

    def validate(self, value, adapt=True):
        number = _number(value)
        if not 0 <= number <= 1:
            raise ValidationError("must be within [0, 1]", value)
        return number if adapt else value


class efficiency(Validator):
    name = "efficiency"

    def validate(self, value, adapt=True):
        number = _number(value)
        if not 0 < number <= 1:
            raise ValidationError("must be within (0, 1]", value)
        return number if adapt else value


class wavelength(Validator):
    """Wavelength in nm, restricted to the optical range the models understand"""
    name = "wavelength"

    def validate(self, value, adapt=True):
        number = _number(value)
        if not 200 <= number <= 5000:
            raise ValidationError("must be a wavelength within [200, 5000] nm", value)
        return number if adapt else value


class count(Validator):
    name = "count"

    def validate(self, value, adapt=True):
        number = _number(value)
        if number != int(number):
            raise ValidationError("must be a whole number", value)
        if number < 0:
            raise ValidationError("must be >= 0", value)
        return int(value) if adapt else value


class seed(Validator):
    name = "seed"
    regexp = re.compile(r"^\d{1,20}$")

    def validate(self, value, adapt=True):
        if isinstance(value, bool):
            raise ValidationError("must be an unsigned integer", value)
        if isinstance(value, str):
            if not self.regexp.match(value):
                raise ValidationError("must be an unsigned integer", value)
            number = int(value)
        elif isinstance(value, int):
            number = value
        else:
            raise ValidationError("must be an unsigned integer", value)
        if not 0 <= number < 2 ** 64:
            raise ValidationError("must fit in 64 bits", value)
        return number if adapt else value


class channel(Pattern):
    name = "channel"
    regexp = re.compile(r"^C\d{2}(L\d{2})?$")

    def validate(self, value, adapt=True):
        super(channel, self).validate(value)
        return value[:3] if adapt else value


class channels(Validator):
    """Channel subset: a list of labels or a comma separated string"""
    name = "channels"

    def validate(self, value, adapt=True):
        if isinstance(value, str):
            value = [v.strip() for v in value.split(',') if v.strip()]
        if not isinstance(value, (list, tuple)) or not value:
            raise ValidationError("must be a nonempty list of channel labels", value)
        _channel = channel()
        result = [_channel.validate(v) for v in value]
        if len(set(result)) != len(result):
            raise ValidationError("channels must not repeat", value)
        return result if adapt else value


class boolean(Validator):
    name = "bool"
    true = ("y", "yes", "1", "t", "true", "on")
    false = ("n", "no", "0", "f", "false", "off")

    def validate(self, value, adapt=True):
        if type(value) is bool:
            return value
        _value = str(value).lower()
        if _value in self.true:
            return True if adapt else value
        elif _value in self.false:
            return False if adapt else value
        raise ValidationError("bool is not valid", value)


class _choice(String):
    choices = ()

    def validate(self, value, adapt=True):
        super(_choice, self).validate(value)
        _value = value.lower()
        if _value not in self.choices:
            raise ValidationError("must be one of %s" % ", ".join(self.choices), value)
        return _value if adapt else value


class mode(_choice):
    name = "mode"
    choices = ("finite", "asymptotic")


class policy(_choice):
    name = "policy"
    choices = ("auto", "pooled", "per_channel")


class ordering(_choice):
    name = "ordering"
    choices = ("swapped", "printed")


class gate(_choice):
    name = "gate"
    choices = ("relative", "fixed")


class kind(String):
    name = "kind"

    def validate(self, value, adapt=True):
        super(kind, self).validate(value)
        if value.upper() not in ("DCM", "DCF"):
            raise ValidationError("must be DCM or DCF", value)
        return value.upper() if adapt else value


class command(_choice):
    name = "command"
    choices = ("spectrum", "channels", "budget", "dispersion",
               "simulate", "keyrate", "optimize", "bell")


class path(String):
    name = "path"

    def validate(self, value, adapt=True):
        super(path, self).validate(value)
        if not value.strip():
            raise ValidationError("must not be empty", value)
        return value

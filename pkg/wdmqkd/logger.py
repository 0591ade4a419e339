import os
import sys
import logging
from json import dumps
from traceback import format_exception

from wdmqkd.helpers import json_defaults


DEBUG = (os.getenv('DEBUG') == 'TRUE')

_log = logging.getLogger('wdmqkd')


def traceback(exc_info=None, **kwargs):
    if not exc_info:
        exc_info = sys.exc_info()

    try:
        kwargs['traceback'] = format_exception(*exc_info)

    except Exception:
        _log.error('Unable to parse traceback %s: %s' % (type(exc_info), repr(exc_info)))

    _log.error(dumps(kwargs, default=json_defaults))


def handler(command):
    """Logs the outcome of one command run, returns the logged payload"""
    status = command.get_status()
    data = dict(command=command.name,
                status=status,
                reason=command.reason,
                outputs=sorted(command.outputs),
                ms="%.0f" % (1000.0 * command.run_time()))

    data.update(command.get_log_payload() or {})
    data.update(getattr(command, '_log_error', {}))
    text = dumps(
        data,
        default=json_defaults,
        sort_keys=True,
        indent=2 if DEBUG else None
    )

    if status >= 2:
        _log.error(text)
    elif status >= 1:
        _log.warning(text)
    else:
        _log.info(text)

    return data

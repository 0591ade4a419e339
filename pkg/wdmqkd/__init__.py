# valideer still references the pre-3.10 collections ABC aliases
import collections as _collections
import collections.abc as _collections_abc
for _name in ('Sequence', 'Mapping', 'MutableMapping', 'Iterable', 'Callable'):
    if not hasattr(_collections, _name):
        setattr(_collections, _name, getattr(_collections_abc, _name))

from .errors import *
from .helpers import *
from .source import *
from .link import *
from .detection import *
from .timetags import *
from .security import *
from .scenario import Scenario, key_report
from .optimizer import *
from .config import parse_config, emit_config, validate_config, load_config, build_scenario, config_hash
from .validated import validated

from . import logger

version = VERSION = __version__ = "0.1.0"

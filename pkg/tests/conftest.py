# valideer still references the pre-3.10 collections ABC aliases
import collections as _collections
import collections.abc as _collections_abc
for _name in ('Sequence', 'Mapping', 'MutableMapping', 'Iterable', 'Callable'):
    if not hasattr(_collections, _name):
        setattr(_collections, _name, getattr(_collections_abc, _name))


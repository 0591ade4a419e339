import re
import csv
import json
import hashlib
from decimal import Decimal

import numpy as np


def json_defaults(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    elif isinstance(obj, np.floating):
        return float(obj)
    elif isinstance(obj, np.bool_):
        return bool(obj)
    elif isinstance(obj, np.ndarray):
        return obj.tolist()
    elif isinstance(obj, Decimal):
        return float(obj)
    elif hasattr(obj, '_asdict'):
        return obj._asdict()
    return repr(obj)


def json_encode(data, indent=None):
    """Stable JSON: sorted keys, numpy aware. Reports are diffed byte for byte."""
    return json.dumps(data, default=json_defaults, sort_keys=True, indent=indent)


def canonical_hash(data):
    text = json.dumps(data, default=json_defaults, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def format_number(value):
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return '%.10g' % value
    return '' if value is None else str(value)


def write_csv(path, header, rows):
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_number(v) for v in row])
    return path


def write_json(path, data):
    with open(path, 'w', encoding='utf-8') as f:
        f.write(json_encode(data, indent=2))
        f.write('\n')
    return path


TOKENIZER = re.compile(r'"|(/\*)|(\*/)|(//)|\n|\r')
END_SLASHES_RE = re.compile(r'(\\)*$')


def json_minify(string, strip_space=True):
    """Strips // and /* */ comments (and optionally whitespace) from a json document
    """
    in_string = False
    in_multi = False
    in_single = False

    new_str = []
    index = 0

    for match in re.finditer(TOKENIZER, string):

        if not (in_multi or in_single):
            tmp = string[index:match.start()]
            if not in_string and strip_space:
                tmp = re.sub('[ \t\n\r]+', '', tmp)
            new_str.append(tmp)

        index = match.end()
        val = match.group()

        if val == '"' and not (in_multi or in_single):
            escaped = END_SLASHES_RE.search(string, 0, match.start())

            # an even run of backslashes leaves the quote unescaped
            if not in_string or (escaped is None or len(escaped.group()) % 2 == 0):
                in_string = not in_string
            index -= 1
        elif not (in_string or in_multi or in_single):
            if val == '/*':
                in_multi = True
            elif val == '//':
                in_single = True
        elif val == '*/' and in_multi and not (in_string or in_single):
            in_multi = False
        elif val in '\r\n' and not (in_multi or in_string) and in_single:
            in_single = False
        elif not ((in_multi or in_single) or (val in ' \r\n\t' and strip_space)):
            new_str.append(val)

    if not (in_multi or in_single):
        new_str.append(string[index:])
    return ''.join(new_str)


def json_load(text):
    """Parses commented json text, empty documents load as {}"""
    stripped = json_minify(text)
    if not stripped.strip():
        return {}
    return json.loads(stripped)

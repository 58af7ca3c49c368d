import json
import re
from typing import Optional

import click
from marshmallow import ValidationError

from hexcryst.domain.errors import ConfigError, HexcrystError, NonConvergence

EXIT_MESSAGES = {
    1: 'Bad input',
    2: 'Solver did not converge',
    3: 'Computation failed',
}


def error_response(exit_code, message=None):
    payload = EXIT_MESSAGES.get(exit_code, 'Unknown error')
    if message:
        payload = f'{payload}: {message}'
    click.echo(f'error: {payload}', err=True)
    return exit_code


def exit_code_for(exc: Exception) -> int:
    if isinstance(exc, (ConfigError, ValidationError, OSError, json.JSONDecodeError, ValueError)):
        return 1
    if isinstance(exc, NonConvergence):
        return 2
    if isinstance(exc, HexcrystError):
        return 3
    raise exc


def key_line(text: str, key: str) -> Optional[int]:
    """First line of ``text`` mentioning ``"key"``."""
    pattern = re.compile(r'"%s"\s*:' % re.escape(key))
    for number, line in enumerate(text.splitlines(), start=1):
        if pattern.search(line):
            return number
    return None


def first_error(messages, path=()):
    """Flattens marshmallow's nested message dict to its first (key path, message)."""
    if isinstance(messages, dict):
        key = next(iter(messages))
        return first_error(messages[key], path + (str(key),))
    if isinstance(messages, list) and messages:
        return first_error(messages[0], path)
    return path, str(messages)


def config_error(source: str, text: str, exc: Exception) -> ConfigError:
    """Line-anchored ``source:LINE: message`` error for a bad config document."""
    if isinstance(exc, json.JSONDecodeError):
        return ConfigError(f'{source}:{exc.lineno}: {exc.msg}', exc.lineno)
    keys, message = first_error(exc.messages)
    named = [k for k in keys if not k.isdigit() and k != '_schema']
    line = None
    for key in reversed(named):
        line = key_line(text, key)
        if line is not None:
            break
    where = '.'.join(named) or 'config'
    return ConfigError(f'{source}:{line or 1}: {where}: {message}', line or 1)

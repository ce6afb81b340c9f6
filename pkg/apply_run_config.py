"""Flat `key = value` run-config files, layered under the command-line flags.

Keys are flag names (`burn-in` or `burn_in`); `#` starts a comment. Values are
converted with the flag's own argparse type, so a config file can only say
what the command line could.
"""

import argparse

from eval_checker.custom_exception import RunConfigError

TRUE_WORDS = ("1", "true", "yes", "on")
FALSE_WORDS = ("0", "false", "no", "off")


def read_run_config(path):
    """Returns {dest: (raw value, line number)}."""
    entries = {}
    with open(path) as f:
        for number, line in enumerate(f, start=1):
            content = line.split("#", 1)[0].strip()
            if not content:
                continue
            key, separator, value = content.partition("=")
            if not separator or not key.strip():
                raise RunConfigError(path, number, f"expected 'key = value', got '{content}'")
            entries[key.strip().replace("-", "_")] = (value.strip(), number)
    return entries


def _actions(parser):
    """Every option action of the parser and of its subcommand parsers, by dest."""
    actions = {}
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for subparser in action.choices.values():
                for dest, found in _actions(subparser).items():
                    actions.setdefault(dest, []).extend(found)
        elif action.option_strings:
            actions.setdefault(action.dest, []).append((parser, action))
    return actions


def _convert(action, raw, path, number):
    if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
        word = raw.lower()
        if word in TRUE_WORDS:
            return True
        if word in FALSE_WORDS:
            return False
        raise RunConfigError(path, number, f"'{raw}' is not a boolean for '{action.dest}'")
    values = raw.split() if action.nargs in ("+", "*") else [raw]
    try:
        converted = [action.type(value) if action.type else value for value in values]
    except (TypeError, ValueError) as e:
        raise RunConfigError(path, number, f"'{raw}' is not valid for '{action.dest}': {e}") from e
    if action.choices is not None:
        for value in converted:
            if value not in action.choices:
                raise RunConfigError(path, number, f"'{value}' is not one of {list(action.choices)} for '{action.dest}'")
    return converted if action.nargs in ("+", "*") else converted[0]


def apply_run_config(parser, path):
    """Installs the file's values as parser defaults; returns the applied {dest: value}."""
    entries = read_run_config(path)
    actions = _actions(parser)
    applied = {}
    for dest, (raw, number) in entries.items():
        if dest == "config":
            raise RunConfigError(path, number, "a run-config file cannot name another config file")
        if dest not in actions:
            raise RunConfigError(path, number, f"unknown key '{dest}'")
        for owner, action in actions[dest]:
            value = _convert(action, raw, path, number)
            owner.set_defaults(**{dest: value})
            applied[dest] = value
    return applied


if __name__ == "__main__":
    from mmp_evaluation import get_parser

    cli = argparse.ArgumentParser(description="Check a run-config file against the mmp_evaluation flags.")
    cli.add_argument("config", help="Path to the run-config file.")
    args = cli.parse_args()
    for dest, value in apply_run_config(get_parser(), args.config).items():
        print(f"{dest} = {value}")

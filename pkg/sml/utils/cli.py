# Copyright (c) 2023 SML Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

from __future__ import print_function

import re
import sys
from argparse import ArgumentParser, RawDescriptionHelpFormatter

import yaml

from sml.core.workspace import get_registered_modules, dump_value

__all__ = [
    'ColorTTY', 'ArgsParser', 'parse_opt', 'print_total_cfg', 'dump_config',
    'list_modules', 'help_module', 'generate_config'
]


class ColorTTY(object):
    def __init__(self):
        super(ColorTTY, self).__init__()
        self.colors = ['red', 'green', 'yellow', 'blue', 'magenta', 'cyan']

    def __getattr__(self, attr):
        if attr in self.colors:
            color = self.colors.index(attr) + 31

            def color_message(message):
                return "\033[{}m{}\033[0m".format(color, message)

            setattr(self, attr, color_message)
            return color_message
        raise AttributeError(attr)

    def bold(self, message):
        return self.with_code('01', message)

    def with_code(self, code, message):
        return "\033[{}m{}\033[0m".format(code, message)


def parse_opt(opts):
    """`key=value` and `Module.key=value` pairs, values parsed as YAML."""
    config = {}
    if not opts:
        return config
    for s in opts:
        s = s.strip()
        if '=' not in s:
            raise ValueError("option '{}' is not of the form key=value".
                             format(s))
        k, v = s.split('=', 1)
        keys = k.split('.')
        cur = config
        for key in keys[:-1]:
            cur = cur.setdefault(key, {})
        cur[keys[-1]] = yaml.load(v, Loader=yaml.Loader)
    return config


class ArgsParser(ArgumentParser):
    """
    Parser with the shared `-c` config file and `-o` override options.
    Usage errors exit with status 1.
    """

    def __init__(self, add_config=True, **kwargs):
        kwargs.setdefault('formatter_class', RawDescriptionHelpFormatter)
        super(ArgsParser, self).__init__(**kwargs)
        if add_config:
            add_config_args(self)

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, '{}: error: {}\n'.format(self.prog, message))

    def parse_args(self, argv=None):
        args = super(ArgsParser, self).parse_args(argv)
        try:
            args.opt = parse_opt(getattr(args, 'opt', None))
        except ValueError as e:
            self.error(str(e))
        return args


def add_config_args(parser):
    parser.add_argument(
        "-c", "--config", default=None, help="configuration file to use")
    parser.add_argument(
        "-o", "--opt", nargs='*', help="set configuration options")


def print_total_cfg(config):
    """Print the registered modules of `config`, marking overrides."""
    modules = get_registered_modules()
    color_tty = ColorTTY()
    green = '___{}___'.format(color_tty.colors.index('green') + 31)

    styled = {}
    for key in config.keys():
        if key not in modules:
            if config[key] is not None and not hasattr(config[key],
                                                       '__dict__'):
                styled[key] = config[key]
            continue
        module = modules[key]
        default = module.default_keys()
        missing = module.missing_keys()
        mismatch = module.mismatched_keys()
        extra = module.extra_keys()
        override = list(set(module.keys()) - set(default) - set(extra))
        replacement = {}
        for name in set(override + default + extra + mismatch + missing):
            new_name = name
            value = "<missing>" if name in missing else module[name]
            if name in extra:
                value = dump_value(value) + " <extraneous>"
            elif name in mismatch:
                value = dump_value(value) + " <type mismatch>"
            elif name in override and value != '<missing>':
                new_name = green + name
            replacement[new_name] = value
        styled[key] = replacement
    buffer = yaml.dump(styled, default_flow_style=False, default_style='')
    buffer = re.sub(r"<missing>", "\033[31m<missing>\033[0m", buffer)
    buffer = re.sub(r"<extraneous>", "\033[33m<extraneous>\033[0m", buffer)
    buffer = re.sub(r"<type mismatch>", "\033[31m<type mismatch>\033[0m",
                    buffer)
    buffer = re.sub(r"___(\d+)___(.*?):", "\033[\\1m\\2\033[0m:", buffer)
    print(buffer)


def dump_config(module, minimal=False):
    args = module.options.values()
    if minimal:
        args = [arg for arg in args if not arg.has_default()]
    return yaml.dump(
        {
            module.name: {
                arg.name: arg.default if arg.has_default() else "<value>"
                for arg in args
            }
        },
        default_flow_style=False,
        default_style='')


def list_modules(category=None, **kwargs):
    color_tty = ColorTTY()
    by_category = {}
    for schema in get_registered_modules().values():
        if category is not None and schema.category != category:
            continue
        by_category.setdefault(schema.category, []).append(schema)

    for cat, modules in sorted(by_category.items()):
        print("Available modules in the category '{}':".format(cat))
        print("")
        max_len = max([len(mod.name) for mod in modules])
        for mod in modules:
            print(color_tty.green(mod.name.ljust(max_len)),
                  mod.doc.split('\n')[0])
        print("")


def help_module(module, **kwargs):
    color_tty = ColorTTY()
    schema = get_registered_modules()[module]
    doc = schema.doc or "Not documented"
    func_args = {arg.name: arg.doc for arg in schema.options.values()}
    max_len = max([len(k) for k in func_args.keys()])
    opts = "\n".join([
        "{} {}".format(color_tty.green(k.ljust(max_len)), v)
        for k, v in func_args.items()
    ])
    print("{}\n\n{}\n\n{}\n\n{}\n\n{}\n\n{}\n{}".format(
        color_tty.bold(color_tty.blue("MODULE DESCRIPTION:")), doc,
        color_tty.bold(color_tty.blue("MODULE OPTIONS:")), opts,
        color_tty.bold(color_tty.blue("CONFIGURATION TEMPLATE:")),
        dump_config(schema),
        color_tty.bold(color_tty.blue("COMMAND LINE OPTIONS:"))))
    for arg in schema.options.values():
        print("-o {}.{}={}".format(schema.name, arg.name,
                                   dump_value(arg.default)
                                   if arg.has_default() else "<value>"))


def generate_config(modules, minimal=False, **kwargs):
    registered = get_registered_modules()
    seen = []
    for name in modules:
        if name in seen:
            continue
        seen.append(name)
        print(dump_config(registered[name], minimal))

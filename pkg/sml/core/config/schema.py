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

import inspect
import logging
from collections import OrderedDict

try:
    from docstring_parser import parse as parse_docstring
except ImportError:
    parse_docstring = None

try:
    from typeguard import check_type as _check_type
except ImportError:
    _check_type = None

__all__ = ['OptionSpec', 'ModuleConfig', 'module_schema', 'check_type']

logger = logging.getLogger(__name__)

PLACEHOLDERS = ('<missing>', '<value>')
EMPTY = inspect.Parameter.empty

if parse_docstring is None:
    logger.warning("docstring_parser is not installed, option "
                   "descriptions are not available")
if _check_type is None:
    logger.warning("typeguard is not installed, option types are not "
                   "checked")


def check_type(name, value, expected_type):
    """
    Raise if `value` does not match `expected_type`. Both the
    `(value, type)` and the older `(name, value, type)` typeguard
    signatures are supported.
    """
    if _check_type is None:
        return
    try:
        _check_type(value, expected_type)
    except TypeError as e:
        if 'positional argument' not in str(e):
            raise
        _check_type(name, value, expected_type)


class OptionSpec(object):
    """One constructor argument of a registered module."""

    def __init__(self, name, doc='', type=None, default=EMPTY):
        super(OptionSpec, self).__init__()
        self.name = name
        self.doc = doc or name
        self.type = type
        self.default = default

    def has_default(self):
        return self.default is not EMPTY


class ModuleConfig(dict):
    """
    Configured values of one registered module. Options that were never
    set read as their constructor default.

    Args:
        cls (type): the registered class
        options (OrderedDict): option name -> `OptionSpec`
        inject (list): options resolved to other registered modules
        accepts_extra (bool): the constructor takes **kwargs
    """

    def __init__(self, cls, options, inject=(), accepts_extra=False):
        super(ModuleConfig, self).__init__()
        self.cls = cls
        self.name = cls.__name__
        self.options = options
        self.inject = list(inject)
        self.accepts_extra = accepts_extra
        self.category = getattr(cls, '__category__', None) or 'module'
        self.doc = ''

    def __missing__(self, key):
        option = self.options.get(key)
        if option is None or not option.has_default():
            raise KeyError(key)
        return option.default

    def default_keys(self):
        return [
            k for k, opt in self.options.items()
            if opt.has_default() and (k not in self or self[k] == opt.default)
        ]

    def missing_keys(self):
        return [
            k for k, opt in self.options.items()
            if (k not in self and not opt.has_default()) or
            (isinstance(self.get(k), str) and self.get(k) in PLACEHOLDERS)
        ]

    def extra_keys(self):
        return sorted(set(self) - set(self.options))

    def mismatched_keys(self):
        mismatched = []
        for name, opt in self.options.items():
            if opt.type is None or name in self.missing_keys():
                continue
            try:
                check_type('{}.{}'.format(self.name, name), self[name],
                           opt.type)
            except Exception:
                mismatched.append(name)
        return mismatched

    def validate(self):
        missing = self.missing_keys()
        if missing:
            raise ValueError("{}: missing option(s) {}".format(
                self.name, ", ".join(missing)))
        extra = self.extra_keys()
        if extra and not self.accepts_extra:
            raise ValueError("{}: unknown option(s) {}".format(
                self.name, ", ".join(extra)))
        mismatched = self.mismatched_keys()
        if mismatched:
            raise TypeError("{}: wrong type for option(s) {}".format(
                self.name, ", ".join(mismatched)))


def _describe(cls):
    doc = cls.__dict__.get('__doc__')
    if not doc:
        return '', {}
    doc = inspect.cleandoc(doc)
    summary = doc.split('\n')[0].strip()
    if parse_docstring is None:
        return summary, {}
    params = parse_docstring(doc).params
    return summary, {p.arg_name.split()[0]: p.description for p in params}


def module_schema(cls):
    """
    Build the `ModuleConfig` of `cls` from its constructor signature.
    Annotations give the option types and the `Args` section of the class
    docstring gives the option descriptions. Injected options are not type
    checked.
    """
    summary, docs = _describe(cls)
    inject = getattr(cls, '__inject__', [])
    options = OrderedDict()
    accepts_extra = False
    params = list(inspect.signature(cls.__init__).parameters.values())[1:]
    for param in params:
        if param.kind == param.VAR_KEYWORD:
            accepts_extra = True
            continue
        if param.kind == param.VAR_POSITIONAL:
            continue
        type_ = param.annotation
        if type_ is EMPTY or param.name in inject:
            type_ = None
        options[param.name] = OptionSpec(param.name,
                                         docs.get(param.name, ''), type_,
                                         param.default)
    config = ModuleConfig(cls, options, inject, accepts_extra)
    config.doc = summary
    return config

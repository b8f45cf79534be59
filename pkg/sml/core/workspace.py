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

import copy
import os

import yaml

from .config.schema import ModuleConfig, module_schema
from .config.yaml_helpers import serializable

__all__ = [
    'global_config',
    'load_config',
    'merge_config',
    'get_registered_modules',
    'create',
    'register',
    'serializable',
    'dump_value',
]


class AttrDict(dict):
    """dict whose top level keys also read as attributes"""

    def __getattr__(self, key):
        try:
            return self[key]
        except KeyError:
            raise AttributeError(key)


global_config = AttrDict()


def dump_value(value):
    """Format `value` for a `-o Module.key=value` command line option."""
    if isinstance(value, (dict, list, tuple)) or hasattr(value, '__dict__'):
        text = ' '.join(yaml.dump(value, default_flow_style=True).split())
        if text.endswith(' ...'):
            text = text[:-4]
        return "'{}'".format(text)
    return str(value)


def load_config(file_path):
    """
    Merge a YAML file into the global config.

    Args:
        file_path (str): path of a .yml or .yaml file

    Returns: global config
    """
    if os.path.splitext(file_path)[1] not in ('.yml', '.yaml'):
        raise ValueError("config must be a .yml or .yaml file, got {}".format(
            file_path))
    with open(file_path) as f:
        return merge_config(yaml.load(f, Loader=yaml.Loader) or {})


def merge_config(config):
    """
    Merge `config` into the global config. A section that is a dict on
    both sides is updated key by key, anything else is replaced.

    Returns: global config
    """
    for key, value in (config or {}).items():
        current = global_config.get(key)
        if isinstance(value, dict) and isinstance(current, dict):
            current.update(value)
        else:
            global_config[key] = value
    return global_config


def get_registered_modules():
    return {
        k: v
        for k, v in global_config.items() if isinstance(v, ModuleConfig)
    }


def register(cls):
    """
    Register a configurable class under its own name.

    Returns: cls
    """
    if isinstance(global_config.get(cls.__name__), ModuleConfig):
        raise ValueError("module {} is already registered".format(
            cls.__name__))
    global_config[cls.__name__] = module_schema(cls)
    return cls


def _resolve(option, value):
    if value is None or isinstance(value, dict) or hasattr(value,
                                                           '__dict__'):
        return value
    if not isinstance(value, str):
        raise ValueError("{}: cannot inject {!r}".format(option, value))
    target = global_config.get(value)
    if isinstance(target, ModuleConfig):
        return create(value)
    if hasattr(target, '__dict__'):
        return target
    raise ValueError("{}: no module registered as '{}'".format(option,
                                                               value))


def create(cls_or_name, **kwargs):
    """
    Create a registered module from the global config. `kwargs` are merged
    into its section first. An option listed in `__inject__` that names a
    registered module receives a new instance of that module.

    Args:
        cls_or_name (type or str): the class or its registered name

    Returns: instance of the module
    """
    name = cls_or_name if isinstance(cls_or_name,
                                     str) else cls_or_name.__name__
    config = global_config.get(name)
    if not isinstance(config, ModuleConfig):
        raise ValueError("module {} is not registered".format(name))
    config.update(kwargs)
    config.validate()

    values = {
        k: config[k]
        for k, opt in config.options.items()
        if k in config or opt.has_default()
    }
    for k in config.extra_keys():
        values[k] = config[k]
    for key in config.inject:
        values[key] = _resolve('{}.{}'.format(name, key), config[key])
    # instances get their own copy of list and dict values
    return config.cls(**copy.deepcopy(values))

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

import yaml

__all__ = ['serializable']


def _field_names(cls):
    if hasattr(cls, '_fields'):
        return list(cls._fields)
    params = list(inspect.signature(cls.__init__).parameters.values())[1:]
    return [
        p.name for p in params
        if p.kind not in (p.VAR_POSITIONAL, p.VAR_KEYWORD)
    ]


def serializable(cls):
    """
    Register the `!ClassName` YAML tag for `cls`. Instances are written as
    a mapping of their constructor arguments, so every argument must be
    readable back as an attribute of the same name. A tagged sequence is
    read as positional arguments.
    """
    tag = u'!{}'.format(cls.__name__)
    names = _field_names(cls)

    def construct(loader, node):
        if isinstance(node, yaml.SequenceNode):
            return cls(*loader.construct_sequence(node, deep=True))
        values = loader.construct_mapping(node, deep=True)
        try:
            return cls(**values)
        except TypeError as e:
            raise yaml.constructor.ConstructorError(
                None, None, "cannot build {}: {}".format(tag, e),
                node.start_mark)

    def represent(dumper, obj):
        return dumper.represent_mapping(
            tag, [(name, getattr(obj, name)) for name in names])

    yaml.add_constructor(tag, construct, Loader=yaml.Loader)
    yaml.add_representer(cls, represent)
    return cls

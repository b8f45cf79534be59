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

import unittest
from collections import namedtuple

import yaml

from sml.core.workspace import (register, create, serializable, merge_config,
                                get_registered_modules, dump_value)


@register
class DemoInner(object):
    """
    Inner demo module

    Args:
        count (int): how many
        names (list): labels
    """
    __category__ = 'demo'

    def __init__(self, count: int=1, names: list=['a']):
        super(DemoInner, self).__init__()
        self.count = count
        self.names = names


@register
class DemoOuter(object):
    """
    Outer demo module

    Args:
        rate (float): required rate
        inner (object): `DemoInner` instance
    """
    __inject__ = ['inner']

    def __init__(self, rate: float, inner='DemoInner'):
        super(DemoOuter, self).__init__()
        self.rate = rate
        self.inner = inner


@serializable
class Pair(namedtuple('Pair', ['a', 'b'])):
    __slots__ = ()


class TestWorkspace(unittest.TestCase):
    def setUp(self):
        self.saved = {k: dict(v) for k, v in get_registered_modules().items()}

    def tearDown(self):
        for name, values in self.saved.items():
            module = get_registered_modules()[name]
            module.clear()
            module.update(values)

    def test_schema(self):
        inner = get_registered_modules()['DemoInner']
        self.assertEqual(inner.doc, 'Inner demo module')
        self.assertEqual(inner.category, 'demo')
        self.assertEqual(list(inner.options), ['count', 'names'])
        self.assertEqual(inner.options['count'].doc, 'how many')
        self.assertEqual(inner['count'], 1)
        outer = get_registered_modules()['DemoOuter']
        self.assertEqual(outer.category, 'module')
        self.assertFalse(outer.options['rate'].has_default())
        self.assertIsNone(outer.options['inner'].type)

    def test_register_twice(self):
        with self.assertRaises(ValueError):
            register(DemoInner)

    def test_create(self):
        merge_config({'DemoInner': {'count': 3}})
        inner = create('DemoInner')
        self.assertEqual(inner.count, 3)
        inner.names.append('b')
        self.assertEqual(create(DemoInner).names, ['a'])

    def test_inject(self):
        merge_config({'DemoOuter': {'rate': 0.5}})
        outer = create('DemoOuter')
        self.assertIsInstance(outer.inner, DemoInner)
        merge_config({'DemoOuter': {'inner': {'count': 2}}})
        self.assertEqual(create('DemoOuter').inner, {'count': 2})
        merge_config({'DemoOuter': {'inner': 'Nowhere'}})
        with self.assertRaises(ValueError):
            create('DemoOuter')

    def test_validate(self):
        with self.assertRaises(ValueError):
            create('DemoOuter')
        with self.assertRaises(ValueError):
            create('DemoInner', colour='red')
        get_registered_modules()['DemoInner'].pop('colour')
        with self.assertRaises(TypeError):
            create('DemoInner', count='three')
        self.assertEqual(
            get_registered_modules()['DemoInner'].mismatched_keys(),
            ['count'])
        with self.assertRaises(ValueError):
            create('NotRegistered')

    def test_serializable(self):
        self.assertEqual(yaml.load('!Pair {a: 1, b: 2}', Loader=yaml.Loader),
                         Pair(1, 2))
        self.assertEqual(yaml.load('!Pair [3, 4]', Loader=yaml.Loader),
                         Pair(3, 4))
        self.assertEqual(dump_value(Pair(1, 2)), "'!Pair {a: 1, b: 2}'")
        self.assertEqual(dump_value([1, 2]), "'[1, 2]'")
        self.assertEqual(dump_value(0.3), '0.3')
        with self.assertRaises(yaml.YAMLError):
            yaml.load('!Pair {a: 1, c: 2}', Loader=yaml.Loader)


if __name__ == '__main__':
    unittest.main()

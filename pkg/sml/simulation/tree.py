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

__all__ = ['MP', 'HP', 'BlockNode', 'BlockTree']

MP = 'mp'
HP = 'hp'


class BlockNode(object):
    __slots__ = ('id', 'parent', 'owner', 'height', 'published')

    def __init__(self, id, parent, owner, published):
        self.id = id
        self.parent = parent
        self.owner = owner
        self.height = 0 if parent is None else parent.height + 1
        self.published = published

    def __repr__(self):
        return 'Block({}, {}, h={}{})'.format(
            self.id, self.owner, self.height,
            '' if self.published else ', private')


class BlockTree(object):
    """
    Block tree of one simulation round.

    Only the part above the last final block is kept: `finalize` counts
    the blocks up to a new anchor and cuts the tree there.
    """

    def __init__(self):
        super(BlockTree, self).__init__()
        self.anchor = BlockNode(0, None, None, True)
        self.next_id = 1
        self.consensus = {MP: 0, HP: 0}

    def add(self, parent, owner, published):
        node = BlockNode(self.next_id, parent, owner, published)
        self.next_id += 1
        return node

    def finalize(self, node):
        """
        Make `node` the new anchor, counting the blocks it confirms.

        Returns:
            set of ids of the newly confirmed blocks
        """
        confirmed = set()
        cur = node
        while cur is not self.anchor:
            assert cur is not None, "block does not descend from the anchor"
            confirmed.add(cur.id)
            self.consensus[cur.owner] += 1
            cur = cur.parent
        node.parent = None
        self.anchor = node
        return confirmed

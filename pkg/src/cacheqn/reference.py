"""Brute-force reference implementations for verification.

Deliberately naive (plain lists / dicts, O(n) scans) and written against
the policy descriptions, independent of the array kernels they check.  The
test suite and `cacheqn verify` compare kernel eviction sequences against
these on batteries of small random instances.
"""

from collections import OrderedDict, deque


def oracle_lru(trace, cap):
    """Returns (hits, misses, eviction key sequence)."""
    od = OrderedDict()
    hits = misses = 0
    evicted = []
    for k in trace:
        k = int(k)
        if k in od:
            hits += 1
            od.move_to_end(k)
        else:
            misses += 1
            if len(od) == cap:
                victim, _ = od.popitem(last=False)
                evicted.append(victim)
            od[k] = True
    return hits, misses, evicted


def oracle_fifo(trace, cap):
    od = OrderedDict()
    hits = misses = 0
    evicted = []
    for k in trace:
        k = int(k)
        if k in od:
            hits += 1
        else:
            misses += 1
            if len(od) == cap:
                victim, _ = od.popitem(last=False)
                evicted.append(victim)
            od[k] = True
    return hits, misses, evicted


def oracle_clock(trace, cap):
    """Insertion-ordered list, head first.  A hit sets the bit in place.  On
    eviction inspect the tail item, then the two above it, evicting the first
    0-bit item; a skipped item spends its second chance (bit cleared) but
    keeps its position; if all three carried the bit, the fourth-from-tail is
    evicted regardless of its own bit."""
    assert cap >= 4
    items = []  # [key, bit], index 0 = head, last = tail
    index = {}
    hits = misses = 0
    evicted = []
    depths = []
    for k in trace:
        k = int(k)
        if k in index:
            hits += 1
            index[k][1] = 1
        else:
            misses += 1
            if len(items) == cap:
                for depth, pos in enumerate((-1, -2, -3), start=1):
                    if items[pos][1] == 0:
                        break
                    items[pos][1] = 0
                else:
                    depth, pos = 4, -4
                victim = items.pop(pos)
                del index[victim[0]]
                evicted.append(victim[0])
                depths.append(depth)
            entry = [k, 0]
            items.insert(0, entry)
            index[k] = entry
    return hits, misses, evicted, depths


class S3FifoReference:
    """Step-wise S3-FIFO model with structural audits after every request."""

    def __init__(self, cap):
        assert cap >= 10
        self.cap = cap
        self.s_cap = max(1, cap // 10)
        self.m_cap = cap - self.s_cap
        self.small = deque()  # left = head
        self.main = deque()
        self.bit = {}
        self.ghost = deque()
        self.hits = self.misses = 0
        self.evicted = []
        self.ghost_admits = 0
        self.stail = 0
        self.stail_bit1 = 0

    def access(self, k):
        k = int(k)
        in_main_before = k in set(self.main)
        if k in self.bit:
            self.hits += 1
            self.bit[k] = 1
        else:
            self.misses += 1
            in_ghost = k in self.ghost
            if in_ghost:
                self.ghost_admits += 1
                self._insert_main(k)
            else:
                self.small.appendleft(k)
                self.bit[k] = 0
                if len(self.small) > self.s_cap:
                    victim = self.small.pop()
                    self.stail += 1
                    if self.bit[victim]:
                        self.stail_bit1 += 1
                        del self.bit[victim]
                        self._insert_main(victim)
                    else:
                        del self.bit[victim]
                        self.evicted.append(victim)
            self.ghost.append(k)
            while len(self.ghost) > len(self.main):
                self.ghost.popleft()
        self.audit()
        # a cached Main item never moves back to Small
        if in_main_before:
            assert k not in set(self.small), "Main item demoted to Small"

    def _insert_main(self, k):
        self.main.appendleft(k)
        self.bit[k] = 0
        if len(self.main) > self.m_cap:
            victim = self.main.pop()
            del self.bit[victim]
            self.evicted.append(victim)

    def audit(self):
        assert len(self.small) <= self.s_cap, "Small list over its 10% share"
        assert len(self.small) + len(self.main) <= self.cap
        s, m = set(self.small), set(self.main)
        assert not (s & m), "key on both lists"
        assert s | m == set(self.bit), "index out of sync with lists"

    def run(self, trace):
        for k in trace:
            self.access(k)
        return self

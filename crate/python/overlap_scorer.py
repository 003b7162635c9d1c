"""Example external similarity scorer for `synthinst analyze --scorer-cmd`.

Reads tab-separated text pairs on stdin (with \\, \t, \n, \r escaped) and
prints one score per line. Computes the same token-overlap F1 as the
built-in scorer, so it can be swapped for an embedding-based one.
"""

import sys
from collections import Counter


def unescape(s):
    out, i = [], 0
    while i < len(s):
        c = s[i]
        if c == "\\" and i + 1 < len(s):
            out.append({"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}.get(s[i + 1], s[i + 1]))
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


def overlap(a, b):
    ta, tb = a.split(), b.split()
    if not ta and not tb:
        return 1.0
    common = sum((Counter(ta) & Counter(tb)).values())
    if common == 0:
        return 0.0
    return 2.0 * common / (len(ta) + len(tb))


def main():
    for line in sys.stdin:
        line = line.rstrip("\n")
        a, _, b = line.partition("\t")
        print(repr(overlap(unescape(a), unescape(b))))
    sys.stdout.flush()


if __name__ == "__main__":
    main()

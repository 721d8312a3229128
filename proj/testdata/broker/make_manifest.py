#!/usr/bin/env python3
"""Writes snapshot.manifest from snapshot.txt without using the C++ parser.

Each resource becomes `resource <Id>` followed by one `<Name> <type> <value>`
line per attribute in file order. Literal values are typed; anything else is
recorded as `expr <source text>` and compared structurally by the test.
"""
import json
import re
import sys


def split_top(text, sep):
    parts, depth, cur, in_str, esc = [], 0, [], False, False
    for ch in text:
        if in_str:
            cur.append(ch)
            if esc:
                esc = False
            elif ch == "\\":
                esc = True
            elif ch == '"':
                in_str = False
            continue
        if ch == '"':
            in_str = True
        elif ch in "[{(":
            depth += 1
        elif ch in "]})":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


def ads(body):
    out, depth, start, in_str = [], 0, None, False
    for i, ch in enumerate(body):
        if in_str:
            if ch == '"' and body[i - 1] != "\\":
                in_str = False
            continue
        if ch == '"':
            in_str = True
        elif ch == "[":
            if depth == 0:
                start = i + 1
            depth += 1
        elif ch == "]":
            depth -= 1
            if depth == 0:
                out.append(body[start:i])
    return out


STRING = re.compile(r'^"((?:[^"\\]|\\.)*)"$')


def classify(v):
    v = v.strip()
    if STRING.match(v):
        return "string", json.dumps(json.loads(v))
    if re.fullmatch(r"\d+", v):
        return "int", v
    if re.fullmatch(r"\d+\.\d*(e[+-]?\d+)?|\d+e[+-]?\d+", v, re.I):
        return "real", repr(float(v))
    if v.lower() in ("true", "false"):
        return "bool", v.lower()
    if v.startswith("{") and v.endswith("}"):
        items = [x.strip() for x in split_top(v[1:-1], ",") if x.strip()]
        if all(STRING.match(x) for x in items):
            return "list", json.dumps([json.loads(x) for x in items])
    return "expr", " ".join(v.split())


def main(src, dst):
    lines = open(src).read().splitlines()
    body = "\n".join(l for l in lines if not l.lstrip().startswith("#") and not l.startswith(("taken-at", "ttl ")))
    out = [l for l in lines if l.startswith(("taken-at", "ttl "))]
    for ad in ads(body):
        attrs = []
        for part in split_top(ad, ";"):
            if not part.strip():
                continue
            name, value = re.match(r"\s*(\w+)\s*=(?!=)(.*)", part, re.S).groups()
            attrs.append((name, *classify(value)))
        rid = next(json.loads(v) for n, t, v in attrs if n.lower() == "id")
        out.append("resource " + rid)
        out.extend(f"{n} {t} {v}" for n, t, v in attrs)
    open(dst, "w").write("\n".join(out) + "\n")


if __name__ == "__main__":
    main(*(sys.argv[1:] or ["snapshot.txt", "snapshot.manifest"]))

#!/usr/bin/env python3
"""Regenerate the binary shapefile fixtures in this directory.

Byte layout follows the ESRI shapefile technical description and the
dBASE III format: .shp headers are big-endian through word 6 and
little-endian after, record headers are big-endian, payloads little-endian.
Unused header fields are written as zeros so the files are deterministic.

Run from anywhere: python3 gen_fixtures.py
"""

import os
import struct

HERE = os.path.dirname(os.path.abspath(__file__))


def shp(shape_type, records):
    """records: list of payload bytes (without the 8-byte record header)."""
    body = b""
    for i, payload in enumerate(records, start=1):
        assert len(payload) % 2 == 0
        body += struct.pack(">ii", i, len(payload) // 2) + payload

    xs, ys = [], []
    for payload in records:
        t = struct.unpack("<i", payload[:4])[0]
        if t == 1:
            x, y = struct.unpack("<dd", payload[4:20])
            xs.append(x)
            ys.append(y)
        elif t == 5:
            xmin, ymin, xmax, ymax = struct.unpack("<4d", payload[4:36])
            xs += [xmin, xmax]
            ys += [ymin, ymax]
    bbox = (min(xs), min(ys), max(xs), max(ys)) if xs else (0.0, 0.0, 0.0, 0.0)

    total = 100 + len(body)
    header = struct.pack(">i", 9994)
    header += b"\x00" * 20
    header += struct.pack(">i", total // 2)
    header += struct.pack("<ii", 1000, shape_type)
    header += struct.pack("<4d", *bbox)
    header += b"\x00" * 32  # z and m ranges
    assert len(header) == 100
    return header + body


def null_shape():
    return struct.pack("<i", 0)


def point(x, y):
    return struct.pack("<idd", 1, x, y)


def polygon(rings):
    """rings: list of [(x, y), ...] closed vertex lists."""
    points = [v for ring in rings for v in ring]
    if points:
        xs = [x for x, _ in points]
        ys = [y for _, y in points]
        bbox = (min(xs), min(ys), max(xs), max(ys))
    else:
        bbox = (0.0, 0.0, 0.0, 0.0)
    payload = struct.pack("<i", 5)
    payload += struct.pack("<4d", *bbox)
    payload += struct.pack("<ii", len(rings), len(points))
    offset = 0
    for ring in rings:
        payload += struct.pack("<i", offset)
        offset += len(ring)
    for x, y in points:
        payload += struct.pack("<dd", x, y)
    return payload


def dbf(fields, rows, deleted=()):
    """fields: list of (name, type_char, length); rows: list of str tuples."""
    record_size = 1 + sum(length for _, _, length in fields)
    header_size = 32 + 32 * len(fields) + 1
    out = struct.pack("<B3BIHH", 0x03, 0, 0, 0, len(rows), header_size, record_size)
    out += b"\x00" * 20
    assert len(out) == 32
    for name, type_char, length in fields:
        desc = name.encode("ascii").ljust(11, b"\x00")
        desc += type_char.encode("ascii")
        desc += b"\x00" * 4
        desc += struct.pack("<BB", length, 0)
        desc += b"\x00" * 14
        assert len(desc) == 32
        out += desc
    out += b"\x0d"
    for i, row in enumerate(rows):
        out += b"\x2a" if i in deleted else b"\x20"
        for cell, (_, _, length) in zip(row, fields):
            out += cell.encode("ascii").ljust(length, b" ")
    out += b"\x1a"
    return out


def square(x0, y0, x1, y1):
    """Clockwise ring for a lon-lat axis-aligned square."""
    return [(x0, y0), (x0, y1), (x1, y1), (x1, y0), (x0, y0)]


def square_ccw(x0, y0, x1, y1):
    return list(reversed(square(x0, y0, x1, y1)))


def write(name, data):
    path = os.path.join(HERE, name)
    with open(path, "wb") as f:
        f.write(data)
    print(f"wrote {name} ({len(data)} bytes)")


def main():
    # Three "state" polygons: two plain squares and one square with a hole.
    write(
        "states_mini.shp",
        shp(
            5,
            [
                polygon([square(0.0, 0.0, 1.0, 1.0)]),
                polygon([square(2.0, 0.0, 3.0, 1.0)]),
                polygon([square(4.0, 0.0, 5.0, 1.0), square_ccw(4.4, 0.4, 4.6, 0.6)]),
            ],
        ),
    )
    write(
        "states_mini.dbf",
        dbf(
            [("GEOID", "C", 5), ("NAME", "C", 10)],
            [("A1", "State A"), ("B2", "State B"), ("C3", "State C")],
        ),
    )

    # Two "site" polygons nested inside states A and B.
    write(
        "sites_mini.shp",
        shp(
            5,
            [
                polygon([square(0.25, 0.25, 0.75, 0.75)]),
                polygon([square(2.25, 0.25, 2.75, 0.75)]),
            ],
        ),
    )
    write(
        "sites_mini.dbf",
        dbf(
            [("SITEID", "C", 10), ("FULLNAME", "C", 20)],
            [("FAIRBANKS", "Fairbanks"), ("CAMPPARKS", "Camp Parks")],
        ),
    )

    # Two point features, one per state square.
    write(
        "towers_mini.shp",
        shp(1, [point(0.5, 0.5), point(2.5, 0.5)]),
    )
    write(
        "towers_mini.dbf",
        dbf(
            [("SITEID", "C", 10), ("FULLNAME", "C", 20)],
            [("TWR1", "Tower One"), ("TWR2", "Tower Two")],
        ),
    )

    # Skip-event coverage: a null shape and an empty polygon record between
    # two ordinary ones, plus a deleted attribute row in a second table.
    write(
        "mixed_mini.shp",
        shp(
            5,
            [
                polygon([square(0.0, 0.0, 1.0, 1.0)]),
                null_shape(),
                polygon([]),
                polygon([square(2.0, 0.0, 3.0, 1.0)]),
            ],
        ),
    )
    write(
        "mixed_mini.dbf",
        dbf(
            [("GEOID", "C", 5), ("NAME", "C", 10)],
            [("X1", "Alpha"), ("X2", "Beta"), ("X3", "Gamma"), ("X4", "Delta")],
        ),
    )
    write(
        "deleted_row.dbf",
        dbf(
            [("GEOID", "C", 5), ("NAME", "C", 10)],
            [("X1", "Alpha"), ("X2", "Beta"), ("X3", "Gamma")],
            deleted={1},
        ),
    )


if __name__ == "__main__":
    main()

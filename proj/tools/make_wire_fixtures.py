#!/usr/bin/env python3
"""Writes the golden wire frames under tests/fixtures/wire."""
import os
import struct
import sys

out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "tests", "fixtures", "wire")


def frame(kind, h, w, c, payload):
    return b"SGRM" + bytes([1, kind]) + struct.pack("<IIB", h, w, c) + payload


frames = {
    "request_gray_1x1.bin": frame(1, 1, 1, 1, bytes([7])),
    "request_rgb_2x3.bin": frame(1, 2, 3, 3, bytes(range(18))),
    "response_2x2.bin": frame(2, 2, 2, 1, struct.pack("<4H", 0, 1, 258, 65535)),
    "error_oom.bin": frame(0x7F, 3, 1, 1, b"oom"),
    "error_empty.bin": frame(0x7F, 0, 1, 1, b""),
}
invalid = {
    "bad_magic.bin": b"SGRX" + frame(1, 1, 1, 1, b"\x00")[4:],
    "bad_version.bin": b"SGRM\x02" + frame(1, 1, 1, 1, b"\x00")[5:],
    "bad_type.bin": frame(3, 1, 1, 1, b"\x00"),
    "short_header.bin": frame(1, 1, 1, 1, b"")[:10],
    "short_payload.bin": frame(1, 2, 2, 3, bytes(11)),
    "trailing_byte.bin": frame(1, 1, 1, 1, b"\x00\x00"),
    "response_three_channels.bin": frame(2, 1, 1, 3, bytes(2)),
    "request_two_channels.bin": frame(1, 1, 1, 2, bytes(2)),
    "request_zero_height.bin": frame(1, 0, 4, 3, b""),
}
os.makedirs(os.path.join(out, "invalid"), exist_ok=True)
for name, data in frames.items():
    with open(os.path.join(out, name), "wb") as f:
        f.write(data)
for name, data in invalid.items():
    with open(os.path.join(out, "invalid", name), "wb") as f:
        f.write(data)

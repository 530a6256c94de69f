"""Regenerates golden_v1.embd with an independent writer (struct + zlib)."""
import struct
import zlib
from pathlib import Path

N, D, V = 3, 2, 1
originals = [[0.5, -1.25], [3.0, 0.0], [-0.0625, 1e-3]]
view0 = [[0.25, -1.0], [2.5, 0.125], [0.0, 1.0]]

body = b"EMBD" + struct.pack("<HBIII", 1, 0, N, D, V)
for rows in (originals, view0):
    for row in rows:
        body += struct.pack("<%df" % D, *row)
body += struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)
Path(__file__).with_name("golden_v1.embd").write_bytes(body)
print(len(body), hex(zlib.crc32(body[:-4])))

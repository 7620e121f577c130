#!/usr/bin/env python3
# Copyright 2026 The PlayNPort Simulator Authors
# SPDX-License-Identifier: Apache-2.0
"""Builds the FAT32 card fixture with pyfatfs (an independent formatter).

Outputs, next to this script:
  card.img.gz        gzip'd raw disk image (MBR + one FAT32 partition)
  card.manifest      <path>,<size>,<sha256> for every regular file
  card.geometry      key=value BPB fields read back by pyfatfs
  card.chains        <path>,<cluster>:<cluster>:... chains read back by pyfatfs
"""
import gzip
import hashlib
import os
import random
import struct
import sys

import fs.path
from pyfatfs.PyFat import PyFat
from pyfatfs.PyFatFS import PyFatFS

HERE = os.path.dirname(os.path.abspath(__file__))
PART_START_LBA = 2048
PART_SECTORS = 40 * 1024 * 1024 // 512
IMAGE_BYTES = (PART_START_LBA + PART_SECTORS) * 512


def payload(seed, n):
    rng = random.Random(seed)
    return bytes(rng.getrandbits(8) for _ in range(n))


BOOK = "".join(
    f"Line {i:02d} of the book.\n" if i % 3 else f"Chapter {i // 3 + 1}\n"
    for i in range(24)
).encode("ascii")


def write_mbr(path):
    entry = struct.pack("<B3sB3sII", 0x00, b"\x00\x02\x00", 0x0C,
                        b"\xfe\xff\xff", PART_START_LBA, PART_SECTORS)
    mbr = bytearray(512)
    mbr[440:444] = struct.pack("<I", 0x504E5031)
    mbr[446:462] = entry
    mbr[510] = 0x55
    mbr[511] = 0xAA
    with open(path, "r+b") as f:
        f.write(mbr)


def main(out_img):
    with open(out_img, "wb") as f:
        f.truncate(IMAGE_BYTES)
    offset = PART_START_LBA * 512

    fat = PyFat(offset=offset)
    fat.mkfs(out_img, PyFat.FAT_TYPE_FAT32, size=PART_SECTORS * 512,
             label="PLAYNPORT", volume_id=0x504E5031)
    fat.close()
    write_mbr(out_img)

    files = {
        "/SONG1.MP3": payload(1, 24000),
        "/SONG2.MP3": payload(2, 9001),
        "/BOOK.TXT": BOOK,
        "/DATA.BIN": payload(3, 700),
        "/MUSIC/TRACK3.WAV": payload(4, 513),
    }
    vfs = PyFatFS(out_img, offset=offset, preserve_case=True)
    vfs.makedir("/MUSIC")
    vfs.makedir("/EMPTY")
    for path in ["/SONG1.MP3", "/SONG2.MP3", "/BOOK.TXT", "/DATA.BIN"]:
        vfs.writebytes(path, files[path])
    # A deleted entry followed by a reused hole gives a fragmented chain,
    # and a long name leaves VFAT entries in the directory.
    vfs.writebytes("/MUSIC/TMP.BIN", payload(5, 1500))
    vfs.writebytes("/MUSIC/TRACK3.WAV", files["/MUSIC/TRACK3.WAV"])
    vfs.remove("/MUSIC/TMP.BIN")
    long_data = payload(6, 5000)
    vfs.writebytes("/MUSIC/Long Track Name.mp3", long_data)
    vfs.close()

    # Read everything back through pyfatfs for the manifest and chains.
    fat = PyFat(offset=offset)
    fat.open(out_img, read_only=True)
    bpb = fat.bpb_header
    geometry = {
        "partition_start_lba": PART_START_LBA,
        "partition_sectors": PART_SECTORS,
        "bytes_per_sector": bpb["BPB_BytsPerSec"],
        "sectors_per_cluster": bpb["BPB_SecPerClus"],
        "reserved_sectors": bpb["BPB_RsvdSecCnt"],
        "fat_count": bpb["BPB_NumFATs"],
        "fat_size_sectors": bpb["BPB_FATSz32"],
        "root_dir_cluster": bpb["BPB_RootClus"],
    }
    fat_start = PART_START_LBA + bpb["BPB_RsvdSecCnt"]
    data_start = fat_start + bpb["BPB_NumFATs"] * bpb["BPB_FATSz32"]
    geometry["fat_start_lba"] = fat_start
    geometry["data_start_lba"] = data_start
    tot_sec = bpb["BPB_TotSec32"] or bpb["BPB_TotSec16"]
    data_sec = tot_sec - bpb["BPB_RsvdSecCnt"] - bpb["BPB_NumFATs"] * bpb["BPB_FATSz32"]
    geometry["total_clusters"] = data_sec // bpb["BPB_SecPerClus"]

    fat.parse_root_dir()
    root = fat.root_dir
    chains = {}
    short_names = {}

    def walk(d, prefix):
        for e in d.get_entries()[0] + d.get_entries()[1]:
            name = e.get_short_name()
            if name in (".", ".."):
                continue
            full = fs.path.join(prefix, name)
            long_name = e.get_full_path()
            short_names[full] = long_name
            if e.is_directory():
                walk(e, full)
            else:
                c = e.get_cluster()
                chains[full] = list(fat.get_cluster_chain(c)) if e.filesize else []

    walk(root, "/")
    fat.close()

    with PyFatFS(out_img, offset=offset, read_only=True) as vfs:
        contents = {}
        for full, long_name in short_names.items():
            if vfs.isdir("/" + long_name):
                continue
            contents[full] = vfs.readbytes("/" + long_name)
    expected = dict(files)
    expected_long = {k for k in contents if k.startswith("/MUSIC/LONG")}
    for k in expected_long:
        expected[k] = long_data
    assert contents == expected, sorted(contents)

    with open(os.path.join(HERE, "card.manifest"), "w") as f:
        f.write("# path,size,sha256 (generated by make_card_image.py)\n")
        for path in sorted(contents):
            data = contents[path]
            f.write(f"{path},{len(data)},{hashlib.sha256(data).hexdigest()}\n")
    with open(os.path.join(HERE, "card.geometry"), "w") as f:
        for k, v in geometry.items():
            f.write(f"{k}={v}\n")
    with open(os.path.join(HERE, "card.chains"), "w") as f:
        for path in sorted(chains):
            f.write(f"{path}," + ":".join(str(c) for c in chains[path]) + "\n")

    with open(out_img, "rb") as src, \
            gzip.GzipFile(os.path.join(HERE, "card.img.gz"), "wb", 9, mtime=0) as dst:
        dst.write(src.read())
    os.remove(out_img)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "/tmp/card.img")

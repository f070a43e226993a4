#!/usr/bin/env python3
"""Independent reference vectors for the C++ test suite.

Uses only hashlib and struct; shares no code with the library. Run once and
freeze the printed values into the tests; `--write-fixtures DIR` regenerates
the wire golden files and genesis fixture.
"""
import hashlib
import json
import struct
import sys


def h256(b: bytes) -> bytes:
    return hashlib.sha256(hashlib.sha256(b).digest()).digest()


def merkle(leaves):
    level = list(leaves)
    while len(level) > 1:
        if len(level) % 2:
            level.append(level[-1])
        level = [h256(level[i] + level[i + 1]) for i in range(0, len(level), 2)]
    return level[0]


def header_bytes(version, prev, mroot, ts, bits, nonce):
    return struct.pack("<i", version) + prev + mroot + struct.pack("<III", ts, bits, nonce)


def target_from_bits(bits):
    exp = bits >> 24
    mant = bits & 0x007FFFFF
    return mant << (8 * (exp - 3)) if exp > 3 else mant >> (8 * (3 - exp))


def work_for_target(t):
    return (1 << 256) // (t + 1)


def txout_tx_form(value, script):
    return struct.pack("<QH", value, len(script)) + script


def tx_bytes(inputs, outputs, coinbase_data):
    out = struct.pack("<I", len(inputs))
    for (txid, vout, witness) in inputs:
        out += txid + struct.pack("<I", vout) + struct.pack("<I", len(witness)) + witness
    out += struct.pack("<I", len(outputs))
    for (value, script) in outputs:
        out += txout_tx_form(value, script)
    if coinbase_data is None:
        out += b"\x00"
    else:
        out += b"\x01" + struct.pack("<I", len(coinbase_data)) + coinbase_data
    return out


def wallet_secret(i):
    return h256(b"wallet" + struct.pack("<I", i))


def key_id(secret):
    return h256(secret)[:20]


def genesis(subsidy=5_000_000_000, outputs=64, keys=64, bits=0x2000FFFF):
    each = subsidy // outputs
    outs = [(each, key_id(wallet_secret(i % keys))) for i in range(outputs)]
    cb = tx_bytes([], outs, struct.pack("<I", 0) + b"genesis")
    txid = h256(cb)
    mroot = merkle([txid])
    target = target_from_bits(bits)
    nonce = 0
    while True:
        hb = header_bytes(1, b"\x00" * 32, mroot, 0, bits, nonce)
        bid = h256(hb)
        if int.from_bytes(bid, "little") <= target:
            return bid, nonce, len(cb), txid
        nonce += 1


def utxo_entry(txid, vout, value, height, is_cb, script):
    return txid + struct.pack("<IQIBH", vout, value, height, 1 if is_cb else 0, len(script)) + script


def fixture_entries():
    rows = []
    for i in range(4):
        txid = h256(b"tx" + bytes([i]))
        rows.append((txid, i % 3, 1000 * (i + 1), i, i == 0, bytes([0x10 + i]) * 20))
    rows.sort(key=lambda r: (r[0], r[1]))
    return [utxo_entry(*r) for r in rows]


def pack(entries, limit):
    chunks, cur = [], b""
    for e in entries:
        if cur and len(cur) + len(e) > limit:
            chunks.append(cur)
            cur = b""
        cur += e
    if cur:
        chunks.append(cur)
    return chunks


def snapshot(entries, height, block_id, limit):
    chunks = pack(entries, limit)
    hdr = struct.pack("<I", height) + block_id + struct.pack("<I", len(chunks))
    layers = [h256(hdr)] + [h256(c) for c in chunks]
    return hdr, chunks, h256(b"".join(layers))


MAGIC = 0x43505231


def frame(cmd, payload):
    return struct.pack("<I", MAGIC) + cmd.encode().ljust(12, b"\x00") + struct.pack("<I", len(payload)) + payload


def wire_vectors():
    a, b, c = h256(b"a"), h256(b"b"), h256(b"c")
    hdr = header_bytes(1, a, b, 1234, 0x2000FFFF, 42)
    cb = tx_bytes([], [(5000, b"\x07" * 20)], struct.pack("<I", 1))
    spend = tx_bytes([(a, 1, b"\x09" * 32)], [(100, b"\x08" * 20), (200, b"\x06" * 20)], None)
    blk_hdr = header_bytes(1, a, merkle([h256(cb), h256(spend)]), 99, 0x2000FFFF, 7)
    block = blk_hdr + struct.pack("<I", 2) + cb + spend
    inv3 = struct.pack("<I", 3) + b"".join(struct.pack("<I", 0x100) + x for x in (a, b, c))
    getdata = struct.pack("<I", 2) + struct.pack("<I", 2) + a + struct.pack("<I", 0x100) + b
    return {
        "version": frame("version", struct.pack("<IQI", 70001, (1 << 0) | (1 << 24), 300)),
        "verack": frame("verack", b""),
        "getheaders": frame("getheaders", struct.pack("<I", 2) + a + b),
        "headers": frame("headers", struct.pack("<I", 1) + hdr + struct.pack("<I", 3)),
        "getdata": frame("getdata", getdata),
        "block": frame("block", block),
        "inv": frame("inv", inv3),
        "getstate": frame("getstate", b""),
        "statechunk": frame("statechunk", c + struct.pack("<I", 1) + b"chunk-bytes"),
    }


def main():
    print("hash256('')   ", h256(b"").hex())
    print("hash256('abc')", h256(b"abc").hex())
    a, b, c = h256(b"a"), h256(b"b"), h256(b"c")
    print("merkle[a,b]   ", merkle([a, b]).hex())
    print("merkle[a,b,c] ", merkle([a, b, c]).hex())
    print("zero header id", h256(b"\x00" * 80).hex())
    t = target_from_bits(0x2000FFFF)
    print("target 2000ffff", hex(t))
    print("work 2000ffff ", work_for_target(t))
    print("work 3x       ", 3 * work_for_target(t))
    print("work 1d00ffff ", work_for_target(target_from_bits(0x1D00FFFF)))
    gid, nonce, cblen, txid = genesis()
    print("genesis id    ", gid.hex(), "nonce", nonce, "coinbase bytes", cblen)
    entries = fixture_entries()
    hdr, chunks, sid = snapshot(entries, 64, h256(b"pulse"), 160)
    print("fixture entries", len(entries), "sizes", [len(e) for e in entries])
    print("fixture chunks ", [len(ch) for ch in chunks])
    print("fixture header hash", h256(hdr).hex())
    print("fixture snapshot id", sid.hex())
    packed = pack([b"x" * 56] * 3, 120)
    print("greedy 3x56 @120 ->", [len(p) for p in packed])
    if len(sys.argv) > 2 and sys.argv[1] == "--write-fixtures":
        d = sys.argv[2]
        for name, data in wire_vectors().items():
            with open(f"{d}/wire/{name}.hex", "w") as f:
                f.write(data.hex() + "\n")
        with open(f"{d}/genesis.json", "w") as f:
            json.dump({"bits": "2000ffff", "subsidy": 5_000_000_000, "genesis_outputs": 64,
                       "wallet_keys": 64, "nonce": nonce, "block_id": gid.hex(),
                       "coinbase_txid": txid.hex()}, f, indent=2)
            f.write("\n")


if __name__ == "__main__":
    main()

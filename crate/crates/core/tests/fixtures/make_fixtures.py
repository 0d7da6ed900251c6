#!/usr/bin/env python3
"""Writes the golden device-protocol fixtures.

Everything here is computed from the documented layouts with struct.pack;
nothing is produced by the Rust code under test. Run from this directory.

Scenario (shared with tests/device_protocol.rs):
  host memory of 4096 bytes at 0x1000, allocated first-fit in 8-byte units:
    SQ  4 x 32 B  at 0x1000
    CQ  4 x 32 B  at 0x1080
    Bell payload  at 0x1100 (48 B)
  IRQ_MASK=1, CTRL=ENABLE|MODE_LATENCY, one Bell job (id 1, 100 shots)
  at SQ slot 0, DOORBELL=1. The device allocates the result next: 0x1130.
"""
import struct

QALB_MAGIC = 0x51414C42
DEV_MAGIC = 0x51504558
SQ, CQ, PAYLOAD, RESULT = 0x1000, 0x1080, 0x1100, 0x1130
RING = 4
SHOTS = 100

H, CNOT, MEASURE = 0x01, 0x20, 0x30


def qalb(nq, ncb, instrs):
    out = struct.pack("<IHHHHI", QALB_MAGIC, 1, nq, ncb, 0, len(instrs))
    for op, q0, q1, cbit, param in instrs:
        out += struct.pack("<BBBBf", op, q0, q1, cbit, param)
    return out


bell = qalb(2, 2, [(H, 0, 0, 0, 0.0), (CNOT, 0, 1, 0, 0.0), (MEASURE, 0, 0, 0, 0.0), (MEASURE, 1, 0, 1, 0.0)])
assert len(bell) == 48

descriptor = struct.pack("<QQIIII", 1, PAYLOAD, len(bell), SHOTS, 0, 0)

# latency mode: every shot reads all-zero cbits
result = struct.pack("<II", 2, 1) + struct.pack("<QQ", 0, SHOTS)

# exec term: shots * (shot + 1q + 2q + 2 meas) with the shipped model
exec_ns = SHOTS * (0 + 1 * 20 + 1 * 40 + 2 * 300)
record = struct.pack("<QIIQQ", 1, 0, len(result), RESULT, exec_ns)

CAPS = 16 | (1 << 8) | (1 << 9)
ENABLE, LATENCY = 1, 4
READY = 1


def regs(ctrl, status, doorbell, cq_head, irq_status):
    values = [DEV_MAGIC, 1, CAPS, ctrl, status, doorbell,
              SQ, 0, RING, CQ, 0, RING, cq_head, 1, irq_status, 0,
              0xFFFFFFFF]  # 0x40 is unmapped
    return struct.pack("<17I", *values)


files = {
    "bell.qalb": bell,
    "descriptor_bell.bin": descriptor,
    "record_bell_latency.bin": record,
    "result_bell_latency.bin": result,
    "result_two_entries.bin": struct.pack("<IIQQQQ", 2, 2, 0, 3, 3, 5),
    "regs_enabled_idle.bin": regs(ENABLE | LATENCY, READY, 0, 0, 0),
    "regs_after_completion.bin": regs(ENABLE | LATENCY, READY, 1, 0, 1),
    "regs_after_ack.bin": regs(ENABLE | LATENCY, READY, 1, 1, 0),
    "regs_power_on.bin": struct.pack("<17I", DEV_MAGIC, 1, CAPS, *([0] * 13), 0xFFFFFFFF),
}

for name, data in files.items():
    with open(name, "wb") as f:
        f.write(data)
    print(f"{name}: {len(data)} bytes")

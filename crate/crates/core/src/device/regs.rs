//! Register map. All registers are 32 bits wide.

pub const DEVICE_MAGIC: u32 = 0x5150_4558;
pub const DEVICE_VERSION: u32 = 1;

pub const MAGIC: u32 = 0x00;
pub const VERSION: u32 = 0x04;
pub const CAPS: u32 = 0x08;
pub const CTRL: u32 = 0x0C;
pub const STATUS: u32 = 0x10;
pub const DOORBELL: u32 = 0x14;
pub const SQ_BASE_LO: u32 = 0x18;
pub const SQ_BASE_HI: u32 = 0x1C;
pub const SQ_LEN: u32 = 0x20;
pub const CQ_BASE_LO: u32 = 0x24;
pub const CQ_BASE_HI: u32 = 0x28;
pub const CQ_LEN: u32 = 0x2C;
pub const CQ_HEAD: u32 = 0x30;
pub const IRQ_MASK: u32 = 0x34;
pub const IRQ_STATUS: u32 = 0x38;
pub const ERR_CODE: u32 = 0x3C;

/// Value returned for unmapped offsets.
pub const UNMAPPED: u32 = 0xFFFF_FFFF;

pub const CTRL_ENABLE: u32 = 1 << 0;
/// Self-clearing.
pub const CTRL_RESET: u32 = 1 << 1;
/// 0 = fidelity, 1 = latency.
pub const CTRL_MODE_LATENCY: u32 = 1 << 2;
pub const CTRL_BYPASS_TRANSPILE: u32 = 1 << 3;
const CTRL_WRITABLE: u32 = CTRL_ENABLE | CTRL_MODE_LATENCY | CTRL_BYPASS_TRANSPILE;

pub const STATUS_READY: u32 = 1 << 0;
pub const STATUS_BUSY: u32 = 1 << 1;
pub const STATUS_ERROR: u32 = 1 << 2;
/// A completion is waiting for a free CQ slot.
pub const STATUS_STALLED: u32 = 1 << 3;

/// IRQ_MASK bit 0 set means the completion interrupt is enabled.
pub const IRQ_CQ: u32 = 1 << 0;

pub const CAPS_FIDELITY: u32 = 1 << 8;
pub const CAPS_LATENCY: u32 = 1 << 9;

/// Smallest and largest accepted ring lengths, in entries.
pub const MIN_RING_LEN: u32 = 2;
pub const MAX_RING_LEN: u32 = 4096;

pub fn caps(num_qubits: u16) -> u32 {
    u32::from(num_qubits & 0xFF) | CAPS_FIDELITY | CAPS_LATENCY
}

pub fn name(offset: u32) -> Option<&'static str> {
    Some(match offset {
        MAGIC => "MAGIC",
        VERSION => "VERSION",
        CAPS => "CAPS",
        CTRL => "CTRL",
        STATUS => "STATUS",
        DOORBELL => "DOORBELL",
        SQ_BASE_LO => "SQ_BASE_LO",
        SQ_BASE_HI => "SQ_BASE_HI",
        SQ_LEN => "SQ_LEN",
        CQ_BASE_LO => "CQ_BASE_LO",
        CQ_BASE_HI => "CQ_BASE_HI",
        CQ_LEN => "CQ_LEN",
        CQ_HEAD => "CQ_HEAD",
        IRQ_MASK => "IRQ_MASK",
        IRQ_STATUS => "IRQ_STATUS",
        ERR_CODE => "ERR_CODE",
        _ => return None,
    })
}

/// Host-writable register state. Derived bits (STATUS) live in the engine.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct Registers {
    pub ctrl: u32,
    pub sq_tail: u32,
    pub sq_base: u64,
    pub sq_len: u32,
    pub cq_base: u64,
    pub cq_len: u32,
    pub cq_head: u32,
    pub irq_mask: u32,
    pub irq_status: u32,
    pub err_code: u32,
}

impl Registers {
    pub fn enabled(&self) -> bool {
        self.ctrl & CTRL_ENABLE != 0
    }

    pub fn latency_mode(&self) -> bool {
        self.ctrl & CTRL_MODE_LATENCY != 0
    }

    pub fn bypass_transpile(&self) -> bool {
        self.ctrl & CTRL_BYPASS_TRANSPILE != 0
    }

    pub fn set_ctrl(&mut self, value: u32) {
        self.ctrl = value & CTRL_WRITABLE;
    }
}

fn set_lo(v: &mut u64, lo: u32) {
    *v = (*v & !0xFFFF_FFFF) | u64::from(lo);
}

fn set_hi(v: &mut u64, hi: u32) {
    *v = (*v & 0xFFFF_FFFF) | (u64::from(hi) << 32);
}

impl Registers {
    /// Ring configuration registers. Ignored while enabled.
    pub fn write_ring_config(&mut self, offset: u32, value: u32) {
        if self.enabled() {
            return;
        }
        match offset {
            SQ_BASE_LO => set_lo(&mut self.sq_base, value),
            SQ_BASE_HI => set_hi(&mut self.sq_base, value),
            SQ_LEN => self.sq_len = value,
            CQ_BASE_LO => set_lo(&mut self.cq_base, value),
            CQ_BASE_HI => set_hi(&mut self.cq_base, value),
            CQ_LEN => self.cq_len = value,
            _ => {}
        }
    }
}

//! A desk-scale quantum accelerator stack.
//!
//! * [`circuit`]: gate-level circuits and their binary/text codecs
//! * [`qsim`]: statevector engine used for fidelity-mode execution
//! * [`transpile`]: native-gate lowering, SWAP routing and a result cache
//! * [`latency`]: timing model and discrete-event clock for latency mode
//! * [`device`]: the register-level virtual accelerator (MMIO, DMA rings, IRQ)
//! * [`host`]: the host abstraction layer with scheduling and the job API

pub mod circuit;
pub mod device;
pub mod host;
pub mod latency;
pub mod qsim;
pub mod transpile;

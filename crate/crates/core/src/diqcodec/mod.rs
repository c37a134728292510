//! Dithered innovations quantizer with an adaptive non-singular code.
//!
//! The encoder quantizes the dithered Kalman innovation, wraps it onto the
//! positive integers and truncates it to a finite alphabet. The truncated
//! symbol is sent as its rank under a shared frequency model, so the most
//! common symbol costs nothing. Escaped components follow in the next slot
//! as Elias omega codes, ahead of that slot's codeword.

mod codec;
pub mod coding;
mod filter;
pub mod pmf;

pub use codec::{
    design_quantizer_sensor, run_codec, write_trace, CodecConfig, CodecOptions, CodecRun, DecodedStep, Decoder,
    Diagnostics, EncodedStep, Encoder, QuantizerDesign, TraceRecord, DEFAULT_CUTOFF, DEFAULT_PRECISION_BITS,
};
pub use coding::{
    elias_omega, elias_omega_decode, nonsingular_codeword, nonsingular_rank, truncate, uniform_quantize, unwrap,
    wrap, Packet,
};
pub use filter::KalmanFilter;
pub use pmf::{Symbol, SymbolModel};

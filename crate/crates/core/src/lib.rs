//! Keyword-spotting primitives that need nothing beyond `alloc`.
//!
//! The crate covers the whole speech-command pipeline as pure functions:
//!
//! * [`wav_io`]: 16-bit PCM WAVE codec, volume statistics and fragmenting.
//! * [`dsp`]: Hamming window, FFT, STFT, dB/log spectrograms, mel filterbank,
//!   DCT-II and MFCC.
//! * [`augment`]: speed change, time shift, background-noise mixing and
//!   fixed-length crop/pad.
//! * [`dataset`]: the 12-class label map, speaker ids, speaker-disjoint folds,
//!   low-volume cleaning and class-balanced batching.
//! * [`nn`]: a small tensor engine with hand-written backward passes, the
//!   VGG-like / ResNet-like 1D builders, a mini 2D CNN and the training loop.
//! * [`eval`]: predictions, softmax-mean ensembling, voting and metrics.
//!
//! File-system access, the binary tensor/checkpoint formats and the CLI live in
//! the `speechcmd` crate.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod augment;
pub mod dataset;
pub mod dsp;
pub mod eval;
pub mod nn;
pub mod rng;
pub mod wav_io;

pub use wav_io::AudioClip;

//! Punctuation restoration for English, Malay and Mandarin.
//!
//! The toolkit treats punctuation prediction as slot filling: a mask token is
//! inserted after every word, and a classifier decides for each mask whether
//! the slot holds nothing, a comma, a period or a question mark. The crate
//! covers the whole pipeline:
//!
//! * [`textnorm`] — punctuation mapping, lowercasing and Malay inverse text
//!   normalization,
//! * [`segment`] — whitespace and dictionary word segmentation,
//! * [`slotmask`] — conversion between punctuated text, label sequences and
//!   masked encoder input,
//! * [`dataset`] — corpus ingestion, filtering, splitting, oversampling and
//!   windowing,
//! * [`model`] — encoder contract, classifier head, optimizer and training,
//! * [`inference`] — windowed punctuation of arbitrary-length text,
//! * [`eval`] — per-class and pooled precision/recall/F1 plus report tables.

pub mod dataset;
pub mod eval;
pub mod inference;
pub mod lang;
pub mod model;
pub mod seed;
pub mod segment;
pub mod slotmask;
pub mod textnorm;

pub use lang::Lang;

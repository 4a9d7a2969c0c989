//! Multiword expression identification with a rule-based candidate pipeline
//! and a gloss-conditioned encoder filter, plus gloss-based word sense
//! disambiguation over the same lexicon.
//!
//! The crate is organised as:
//!
//! * [`lexicon`]: the sense inventory (JSON lines).
//! * [`corpus`]: cupt, DiMSUM and canonical JSON sentence I/O.
//! * [`pipeline`]: candidate detection, filters, overlap resolution and
//!   training-data preprocessing.
//! * [`scorer`]: Bi-encoder and Poly-encoder scoring over a small trainable
//!   encoder, or over externally computed vectors.
//! * [`training`]: cross-entropy objective, batching, gradients and SGD.
//! * [`eval`]: MWE-based, token-based, link-based and WSD metrics.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled and plain iterators otherwise.

pub mod corpus;
pub mod eval;
pub mod lexicon;
pub mod par;
pub mod pipeline;
pub mod scorer;
pub mod synthetic;
pub mod training;

pub use corpus::{Format, MweAnnotation, Sentence, Token};
pub use lexicon::{load_lexicon, Lexicon, LexiconEntry, Pos, Sense};

//! Punctuation restoration for two-channel conversational transcripts.
//!
//! The pipeline turns time-annotated and punctuated transcripts into a
//! labeled token dataset ([`corpus`]), counts word co-occurrences
//! ([`cooc`]), trains or retrofits word vectors against pre-trained ones
//! ([`embeddings`]), tags every token with a dilated 1D convolutional
//! network ([`tagger`]) and scores the result ([`eval`]). [`pipeline`]
//! wires the stages together behind a flat configuration file.

pub mod cooc;
pub mod corpus;
pub mod embeddings;
pub mod eval;
pub mod pipeline;
pub mod tagger;
pub mod synth;

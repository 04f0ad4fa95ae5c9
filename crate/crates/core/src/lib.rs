//! Functional-group-aware molecular representation toolkit.
//!
//! The crate covers the whole chain from SMILES text to learned embeddings:
//! parsing and canonical writing ([`mol`]), rule-based functional-group
//! detection ([`fg`]), FG-enhanced tokenization ([`tokenize`]), FG graphs
//! ([`fragment`]), the FG knowledge graph ([`kg`]), ComplEx embeddings
//! ([`kge`]), GCN link prediction ([`gnn`]) and contrastive alignment of
//! sequence and graph views ([`align`]).

pub mod align;
pub mod corpus;
pub mod element;
pub mod fg;
pub mod fragment;
pub mod gnn;
pub mod kg;
pub mod kge;
pub mod mol;
pub mod nn;
pub mod par;
pub mod pattern;
pub mod pipeline;
pub mod tokenize;

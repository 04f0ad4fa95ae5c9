//! Molecular graph model, SMILES reader/writer and ring perception.

mod canon;
mod graph;
mod iso;
mod parse;
mod rings;
mod write;

pub use canon::canonical_ranks;
pub use graph::{implicit_h_for, Atom, Bond, BondOrder, Edge, GraphError, MolGraph};
pub use iso::is_isomorphic;
pub use parse::{parse_components, parse_smiles, parse_smiles_with, ParseOptions, SmilesError};
pub use rings::{perceive_rings, RingInfo};
pub use write::{atom_text, write_smiles, write_tokens, write_tokens_ranked, TokenKind, WrittenToken};

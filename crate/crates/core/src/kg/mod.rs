//! FG knowledge graph and the descriptor calculators behind its numeric relations.

mod build;
mod descriptors;

pub use build::*;
pub use descriptors::{
    compute_logp, compute_mw, compute_tpsa, descriptors, estimate_solubility, CrippenTable,
    DescriptorSet, SolubilityModel, TpsaTable,
};

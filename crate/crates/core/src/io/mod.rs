//! Binary fields, CSV tables and the artifact index.

mod field;
mod index;
mod table;

pub use field::{
    decode_field, encode_field, read_field, sidecar_path, state_metadata, write_field, write_state, DTYPE_COMPLEX128, FIELD_MAGIC,
    FIELD_VERSION,
};
pub use index::{Artifact, ArtifactIndex, INDEX_FILE};
pub use table::{trajectory_columns, trajectory_table, Cell, Table};

#[cfg(test)]
mod tests;

//! Versioned, checksummed JSON artifacts, run configuration and atomic writes.

mod config;
mod envelope;

pub use config::{RunConfig, ENV_OUT_ROOT};
pub use envelope::{
    checksum, load_ann, load_envelope, load_report, load_sdnn, read_envelope, save_ann, save_envelope, save_report,
    save_sdnn, write_atomic, AnnWeights, Envelope, LayerRecord, SdnnWeights, SCHEMA_VERSION,
};

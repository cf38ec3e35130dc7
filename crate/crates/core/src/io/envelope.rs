use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::eval::EvalReport;
use crate::mlp::{Activation, DenseLayer, DenseNet, GaussianHead, PolicyNet};
use crate::sdnn::{SdnnMode, SdnnNet, SdnnParams};
use crate::{Error, Result};

/// `major.minor`; loaders accept any minor of the same major.
pub const SCHEMA_VERSION: &str = "1.0";
const MAJOR: u32 = 1;

/// On-disk wrapper: `payload` plus its SHA-256 over the compact JSON encoding.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Envelope {
    pub format: String,
    pub schema_version: String,
    pub checksum: String,
    pub payload: serde_json::Value,
}

pub fn checksum(payload: &serde_json::Value) -> Result<String> {
    let bytes = serde_json::to_vec(payload)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Writes to a temporary file in the target directory, then renames over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn check_version(found: &str) -> Result<()> {
    let major = found.split('.').next().and_then(|m| m.parse::<u32>().ok());
    if major != Some(MAJOR) {
        return Err(Error::UnsupportedVersion {
            found: found.to_string(),
            supported: MAJOR,
        });
    }
    Ok(())
}

pub fn save_envelope<T: Serialize>(path: &Path, format: &str, payload: &T) -> Result<()> {
    let payload = serde_json::to_value(payload)?;
    let env = Envelope {
        format: format.to_string(),
        schema_version: SCHEMA_VERSION.to_string(),
        checksum: checksum(&payload)?,
        payload,
    };
    let mut bytes = serde_json::to_vec_pretty(&env)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Parses and verifies an envelope of the given format.
pub fn read_envelope(bytes: &[u8], format: &str) -> Result<Envelope> {
    let env: Envelope = serde_json::from_slice(bytes)?;
    check_version(&env.schema_version)?;
    if env.format != format {
        return Err(Error::Config(format!("expected a '{format}' file, found '{}'", env.format)));
    }
    let actual = checksum(&env.payload)?;
    if actual != env.checksum {
        return Err(Error::Checksum(format!("stored {}, computed {actual}", env.checksum)));
    }
    Ok(env)
}

pub fn load_envelope<T: DeserializeOwned>(path: &Path, format: &str) -> Result<T> {
    let bytes = fs::read(path)?;
    let env = read_envelope(&bytes, format)?;
    Ok(serde_json::from_value(env.payload)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
    /// Row-major `out_dim × in_dim`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

fn records(net: &DenseNet<f64>) -> Vec<LayerRecord> {
    net.layers()
        .iter()
        .map(|l| LayerRecord {
            in_dim: l.in_dim,
            out_dim: l.out_dim,
            activation: l.activation,
            weights: l.weights.clone(),
            bias: l.bias.clone(),
        })
        .collect()
}

fn from_records(rs: &[LayerRecord]) -> Result<DenseNet<f64>> {
    let layers = rs
        .iter()
        .map(|r| {
            if r.weights.len() != r.in_dim * r.out_dim || r.bias.len() != r.out_dim {
                return Err(Error::Config(format!(
                    "layer {}x{} has {} weights and {} biases",
                    r.out_dim,
                    r.in_dim,
                    r.weights.len(),
                    r.bias.len()
                )));
            }
            Ok(DenseLayer {
                in_dim: r.in_dim,
                out_dim: r.out_dim,
                weights: r.weights.clone(),
                bias: r.bias.clone(),
                activation: r.activation,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let net = DenseNet::from_layers(layers)?;
    if !net.is_finite() {
        return Err(Error::NonFinite("stored weights".into()));
    }
    Ok(net)
}

/// Actor (and optionally critic) weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnWeights {
    pub layer_dims: Vec<usize>,
    pub actor: Vec<LayerRecord>,
    pub log_std: Vec<f64>,
    #[serde(default)]
    pub critic: Option<Vec<LayerRecord>>,
}

impl AnnWeights {
    pub fn new(policy: &PolicyNet<f64>, critic: Option<&DenseNet<f64>>) -> Self {
        Self {
            layer_dims: policy.net.layer_dims(),
            actor: records(&policy.net),
            log_std: policy.head.log_std().to_vec(),
            critic: critic.map(records),
        }
    }

    pub fn policy(&self) -> Result<PolicyNet<f64>> {
        let net = from_records(&self.actor)?;
        if net.layer_dims() != self.layer_dims {
            return Err(Error::Config(format!(
                "layer_dims {:?} disagree with the stored layers {:?}",
                self.layer_dims,
                net.layer_dims()
            )));
        }
        let mut head = GaussianHead::constant(self.log_std.len(), 0.0);
        head.set_log_std(&self.log_std);
        PolicyNet::new(net, head)
    }

    pub fn critic(&self) -> Result<Option<DenseNet<f64>>> {
        self.critic.as_deref().map(from_records).transpose()
    }
}

pub const ANN_FORMAT: &str = "ann-weights";
pub const SDNN_FORMAT: &str = "sdnn-weights";
pub const REPORT_FORMAT: &str = "eval-report";

pub fn save_ann(path: &Path, w: &AnnWeights) -> Result<()> {
    save_envelope(path, ANN_FORMAT, w)
}

pub fn load_ann(path: &Path) -> Result<AnnWeights> {
    load_envelope(path, ANN_FORMAT)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdnnWeights {
    pub layer_dims: Vec<usize>,
    pub params: SdnnParams,
}

impl SdnnWeights {
    pub fn new(net: &SdnnNet<f64>) -> Self {
        Self {
            layer_dims: net.dims(),
            params: net.params().clone(),
        }
    }

    pub fn net(&self, mode: SdnnMode) -> Result<SdnnNet<f64>> {
        let net = SdnnNet::from_params(self.params.clone(), mode)?;
        if net.dims() != self.layer_dims {
            return Err(Error::Config(format!(
                "layer_dims {:?} disagree with the stored layers {:?}",
                self.layer_dims,
                net.dims()
            )));
        }
        Ok(net)
    }
}

pub fn save_sdnn(path: &Path, w: &SdnnWeights) -> Result<()> {
    save_envelope(path, SDNN_FORMAT, w)
}

pub fn load_sdnn(path: &Path) -> Result<SdnnWeights> {
    load_envelope(path, SDNN_FORMAT)
}

pub fn save_report(path: &Path, r: &EvalReport) -> Result<()> {
    save_envelope(path, REPORT_FORMAT, r)
}

pub fn load_report(path: &Path) -> Result<EvalReport> {
    load_envelope(path, REPORT_FORMAT)
}

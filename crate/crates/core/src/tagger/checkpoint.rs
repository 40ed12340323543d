//! Model files: `key value` header lines, a `data` line, then every weight
//! as a little-endian f64 in the order of [`CnnModel::params`].

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::str::FromStr;

use super::{CnnConfig, CnnModel, LayerShape, Regularization, TaggerError};

const MAGIC: &str = "punctuate-cnn";
const VERSION: u32 = 1;

pub fn save_model<W: Write>(model: &CnnModel, mut out: W) -> Result<(), TaggerError> {
    let c = &model.config;
    let layers: Vec<String> = c.layers.iter().map(|l| format!("{}x{}", l.kernel, l.dilation)).collect();
    writeln!(out, "{MAGIC} {VERSION}")?;
    writeln!(out, "embedding_dim {}", c.embedding_dim)?;
    writeln!(out, "window_len {}", c.window_len)?;
    writeln!(out, "offset_mode {}", c.offset_mode)?;
    writeln!(out, "filters {}", c.filters)?;
    writeln!(out, "layers {}", layers.join(","))?;
    writeln!(out, "dropout {}", c.regularization.dropout)?;
    writeln!(out, "noise_sigma {}", c.regularization.noise_sigma)?;
    writeln!(out, "weight_decay {}", c.regularization.weight_decay)?;
    writeln!(out, "seed {}", c.seed)?;
    writeln!(out, "params {}", model.param_count())?;
    writeln!(out, "data")?;
    let mut buf = Vec::with_capacity(8 * model.param_count());
    for p in model.params() {
        for v in p {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    out.flush()?;
    Ok(())
}

fn bad(msg: impl Into<String>) -> TaggerError {
    TaggerError::Checkpoint(msg.into())
}

fn field<T: FromStr>(fields: &HashMap<String, String>, key: &str) -> Result<T, TaggerError> {
    let raw = fields.get(key).ok_or_else(|| bad(format!("missing '{key}'")))?;
    raw.parse().map_err(|_| bad(format!("invalid {key} '{raw}'")))
}

fn parse_layer(raw: &str) -> Result<LayerShape, TaggerError> {
    let (k, d) = raw.split_once('x').ok_or_else(|| bad(format!("invalid layer '{raw}'")))?;
    match (k.parse(), d.parse()) {
        (Ok(kernel), Ok(dilation)) => Ok(LayerShape { kernel, dilation }),
        _ => Err(bad(format!("invalid layer '{raw}'"))),
    }
}

pub fn load_model<R: BufRead>(mut input: R) -> Result<CnnModel, TaggerError> {
    let mut line = String::new();
    input.read_line(&mut line)?;
    match line.trim_end().split_once(' ') {
        Some((MAGIC, v)) if v == VERSION.to_string() => {}
        Some((MAGIC, v)) => return Err(bad(format!("unsupported version {v}"))),
        _ => return Err(bad("not a model file")),
    }
    let mut fields = HashMap::new();
    loop {
        line.clear();
        if input.read_line(&mut line)? == 0 {
            return Err(bad("header ends before 'data'"));
        }
        let l = line.trim_end();
        if l == "data" {
            break;
        }
        let (k, v) = l.split_once(' ').ok_or_else(|| bad(format!("invalid header line '{l}'")))?;
        fields.insert(k.to_string(), v.to_string());
    }
    let layers: Vec<LayerShape> = field::<String>(&fields, "layers")?
        .split(',')
        .map(parse_layer)
        .collect::<Result<_, _>>()?;
    let config = CnnConfig {
        embedding_dim: field(&fields, "embedding_dim")?,
        window_len: field(&fields, "window_len")?,
        offset_mode: field(&fields, "offset_mode")?,
        filters: field(&fields, "filters")?,
        layers,
        regularization: Regularization {
            dropout: field(&fields, "dropout")?,
            noise_sigma: field(&fields, "noise_sigma")?,
            weight_decay: field(&fields, "weight_decay")?,
        },
        seed: field(&fields, "seed")?,
    };
    let mut model = CnnModel::zeros(config)?;
    let declared: usize = field(&fields, "params")?;
    if declared != model.param_count() {
        return Err(bad(format!(
            "header declares {declared} weights, architecture has {}",
            model.param_count()
        )));
    }
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * declared {
        return Err(bad(format!("expected {} data bytes, found {}", 8 * declared, bytes.len())));
    }
    let mut chunks = bytes.chunks_exact(8);
    for p in model.params_mut() {
        for (v, b) in p.iter_mut().zip(&mut chunks) {
            *v = f64::from_le_bytes(b.try_into().expect("8 bytes"));
        }
    }
    Ok(model)
}

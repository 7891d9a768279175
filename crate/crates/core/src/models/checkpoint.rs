//! Model checkpoint files.
//!
//! ```text
//! "NCACFMD1"  u32 header_len  header (UTF-8 `key<TAB>value` lines)
//! users matrix blob
//! u8 has_items    [matrix blob]
//! u8 has_content  [mlp blob]
//! u8 deep_active  [mlp blob]
//! u8 has_stats    [u64 len, f64[len] means, f64[len] stds]
//! ```

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::models::{
    Combination, ContentExtractor, Coupling, Embeddings, FeatureStats, Family, Hyperparams, InteractionConfig,
    InteractionKind, InteractionModel, Model, ModelDims, ModelVariant,
};
use crate::numerics::blob::{self, read_u32, read_u64, read_u8, read_reals, write_reals, write_u32, write_u64};
use crate::numerics::Activation;
use crate::scalar::Scalar;

const MODEL_MAGIC: &[u8; 8] = b"NCACFMD1";

fn activation_name(a: Activation) -> &'static str {
    match a {
        Activation::Relu => "relu",
        Activation::Identity => "identity",
        Activation::Sigmoid => "sigmoid",
    }
}

fn header_lines<T: Scalar>(model: &Model<T>) -> Vec<(String, String)> {
    let v = &model.variant;
    let d = &model.dims;
    let mut h: Vec<(String, String)> = vec![
        ("family".into(), v.family.to_string()),
        ("coupling".into(), v.coupling.to_string()),
        ("interaction".into(), v.interaction.kind.to_string()),
        ("combination".into(), v.interaction.combination.to_string()),
        ("hidden_layers".into(), v.interaction.hidden_layers.to_string()),
        ("output_activation".into(), activation_name(v.interaction.output_activation).into()),
        ("train_output".into(), v.interaction.train_output.to_string()),
        ("users".into(), d.users.to_string()),
        ("items".into(), d.items.to_string()),
        ("k".into(), d.k.to_string()),
        ("features".into(), d.features.to_string()),
        ("hidden_width".into(), d.hidden_width.to_string()),
        ("content_layers".into(), d.content_layers.to_string()),
        ("seed".into(), model.seed.to_string()),
        ("active_interaction".into(), if model.interaction.is_deep() { "deep" } else { "dot-product" }.into()),
    ];
    for (k, val) in model.hyper.to_fields() {
        h.push((format!("hyper.{k}"), val));
    }
    h
}

pub fn write_model<T: Scalar>(w: &mut impl Write, model: &Model<T>) -> Result<()> {
    let mut header = String::new();
    for (k, v) in header_lines(model) {
        header.push_str(&format!("{k}\t{v}\n"));
    }
    w.write_all(MODEL_MAGIC)?;
    write_u32(w, header.len() as u32)?;
    w.write_all(header.as_bytes())?;
    blob::write_matrix(w, &model.embeddings.users)?;
    w.write_all(&[model.embeddings.items.is_some() as u8])?;
    if let Some(h) = &model.embeddings.items {
        blob::write_matrix(w, h)?;
    }
    w.write_all(&[model.extractor.is_some() as u8])?;
    if let Some(e) = &model.extractor {
        blob::write_mlp(w, &e.net)?;
    }
    w.write_all(&[model.interaction.is_deep() as u8])?;
    if let Some(net) = model.interaction.net() {
        blob::write_mlp(w, net)?;
    }
    w.write_all(&[model.feature_stats.is_some() as u8])?;
    if let Some(s) = &model.feature_stats {
        write_u64(w, s.means.len() as u64)?;
        write_reals(w, &s.means)?;
        write_reals(w, &s.stds)?;
    }
    Ok(())
}

struct Header(BTreeMap<String, String>);

impl Header {
    fn get(&self, key: &str) -> Result<&str> {
        self.0
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Checkpoint(format!("header lacks `{key}`")))
    }

    fn parse<V: std::str::FromStr>(&self, key: &str) -> Result<V> {
        let raw = self.get(key)?;
        raw.parse()
            .map_err(|_| Error::Checkpoint(format!("bad header value `{key}` = `{raw}`")))
    }
}

pub fn read_model<T: Scalar>(r: &mut impl Read) -> Result<Model<T>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MODEL_MAGIC {
        return Err(Error::Checkpoint("not a model checkpoint (bad magic)".into()));
    }
    let len = read_u32(r)? as usize;
    let mut raw = vec![0u8; len];
    r.read_exact(&mut raw)?;
    let text = String::from_utf8(raw).map_err(|_| Error::Checkpoint("header is not UTF-8".into()))?;
    let mut map = BTreeMap::new();
    for line in text.lines() {
        let (k, v) = line
            .split_once('\t')
            .ok_or_else(|| Error::Checkpoint(format!("malformed header line `{line}`")))?;
        map.insert(k.to_string(), v.to_string());
    }
    let h = Header(map);

    let output_activation = match h.get("output_activation")? {
        "identity" => Activation::Identity,
        "sigmoid" => Activation::Sigmoid,
        other => return Err(Error::Checkpoint(format!("bad output activation `{other}`"))),
    };
    let interaction = InteractionConfig {
        kind: h.get("interaction")?.parse::<InteractionKind>()?,
        combination: h.get("combination")?.parse::<Combination>()?,
        hidden_layers: h.parse("hidden_layers")?,
        output_activation,
        train_output: h.parse("train_output")?,
    };
    let variant = ModelVariant::new(
        h.get("family")?.parse::<Family>()?,
        h.get("coupling")?.parse::<Coupling>()?,
        interaction,
    )?;
    let dims = ModelDims {
        users: h.parse("users")?,
        items: h.parse("items")?,
        k: h.parse("k")?,
        features: h.parse("features")?,
        hidden_width: h.parse("hidden_width")?,
        content_layers: h.parse("content_layers")?,
    };
    let hyper = Hyperparams::from_fields(
        h.0.iter()
            .filter_map(|(k, v)| k.strip_prefix("hyper.").map(|k| (k, v.as_str()))),
    )?;
    let seed = h.parse("seed")?;

    let users = blob::read_matrix(r)?;
    let items = if read_u8(r)? != 0 { Some(blob::read_matrix(r)?) } else { None };
    let extractor = if read_u8(r)? != 0 {
        Some(ContentExtractor::from_net(blob::read_mlp(r)?)?)
    } else {
        None
    };
    let interaction = if read_u8(r)? != 0 {
        InteractionModel::Deep {
            config: variant.interaction,
            net: blob::read_mlp(r)?,
        }
    } else {
        InteractionModel::DotProduct
    };
    let feature_stats = if read_u8(r)? != 0 {
        let n = read_u64(r)? as usize;
        if n > 1 << 24 {
            return Err(Error::Checkpoint(format!("implausible feature width {n}")));
        }
        Some(FeatureStats {
            means: read_reals(r, n)?,
            stds: read_reals(r, n)?,
        })
    } else {
        None
    };

    if users.shape() != (dims.users, dims.k)
        || items.as_ref().is_some_and(|m| m.shape() != (dims.items, dims.k))
        || items.is_some() != variant.has_item_embeddings()
        || extractor.is_some() != variant.has_content()
    {
        return Err(Error::Checkpoint("parameter blobs disagree with the header".into()));
    }
    Ok(Model {
        variant,
        dims,
        seed,
        hyper,
        embeddings: Embeddings { users, items },
        extractor,
        interaction,
        feature_stats,
    })
}

pub fn save_model<T: Scalar>(path: &Path, model: &Model<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_model(&mut w, model)?;
    w.flush()?;
    Ok(())
}

pub fn load_model<T: Scalar>(path: &Path) -> Result<Model<T>> {
    let mut r = BufReader::new(File::open(path)?);
    read_model(&mut r)
}

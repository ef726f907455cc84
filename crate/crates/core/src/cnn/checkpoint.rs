//! Network checkpoints: `manifest.txt` with the layer specs plus one DLT1
//! file per parameter tensor (`layer<i>_w.dlt`, `layer<i>_b.dlt`).

use std::fs;
use std::path::Path;

use crate::cnn::layer::{Layer, LayerSpec};
use crate::cnn::network::{Loss, Network, Norm};
use crate::cnn::train::History;
use crate::error::{Error, Result};
use crate::io::KeyValues;
use crate::numerics::dlt;

pub fn save_network(dir: &Path, net: &Network, history: Option<&History>) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut kv = KeyValues::new();
    kv.set("kind", "cnn");
    kv.set("loss", net.loss.name());
    kv.set(
        "input_shape",
        net.input_shape.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
    );
    kv.set("norm_center", net.norm.center);
    kv.set("norm_scale", net.norm.scale);
    kv.set("seed", net.seed);
    kv.set("layers", net.layers.len());
    for (i, (l, frozen)) in net.layers.iter().zip(&net.frozen).enumerate() {
        kv.set(&format!("layer.{i}"), l.spec());
        kv.set(&format!("frozen.{i}"), frozen);
        if let Some((w, b)) = l.params() {
            dlt::write(&dir.join(format!("layer{i}_w.dlt")), w)?;
            dlt::write(&dir.join(format!("layer{i}_b.dlt")), b)?;
        }
    }
    if let Some(h) = history {
        kv.set("history.best_epoch", h.best_epoch);
        kv.set("history.stopped_early", h.stopped_early);
        for e in &h.epochs {
            let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6}"));
            kv.set(
                &format!("history.{}", e.epoch),
                format!(
                    "{:.6} {} {} {}",
                    e.train_loss,
                    opt(e.train_acc),
                    opt(e.val_loss),
                    opt(e.val_acc)
                ),
            );
        }
    }
    kv.save(&dir.join("manifest.txt"))
}

pub fn load_network(dir: &Path) -> Result<Network> {
    let kv = KeyValues::load(&dir.join("manifest.txt"))?;
    if kv.get("kind") != Some("cnn") {
        return Err(Error::Format("not a cnn checkpoint".into()));
    }
    let input_shape: Vec<usize> = kv
        .list("input_shape")?
        .ok_or_else(|| Error::Format("missing key `input_shape`".into()))?;
    let n: usize = kv.require_parsed("layers")?;
    let mut layers = Vec::with_capacity(n);
    let mut frozen = Vec::with_capacity(n);
    for i in 0..n {
        let spec: LayerSpec = kv.require(&format!("layer.{i}"))?.parse()?;
        frozen.push(kv.require_parsed::<bool>(&format!("frozen.{i}"))?);
        let layer = match spec {
            LayerSpec::Conv {
                padding, activation, ..
            } => Layer::Conv {
                kernels: dlt::read(&dir.join(format!("layer{i}_w.dlt")))?,
                bias: dlt::read(&dir.join(format!("layer{i}_b.dlt")))?,
                padding,
                activation,
            },
            LayerSpec::Dense {
                activation, dropout, ..
            } => Layer::Dense {
                w: dlt::read(&dir.join(format!("layer{i}_w.dlt")))?,
                b: dlt::read(&dir.join(format!("layer{i}_b.dlt")))?,
                activation,
                dropout,
            },
            LayerSpec::MaxPool { k, ceil } => Layer::MaxPool { k, ceil },
            LayerSpec::Flatten => Layer::Flatten,
            LayerSpec::Dropout { rate } => Layer::Dropout { rate },
            LayerSpec::Softmax => Layer::SoftmaxOutput { classes: 0 },
        };
        if layer.spec() != spec && !matches!(spec, LayerSpec::Softmax) {
            return Err(Error::Format(format!("layer {i} tensors disagree with `{spec}`")));
        }
        layers.push(layer);
    }
    // a softmax takes its width from its input
    let mut shape = input_shape.clone();
    for layer in &mut layers {
        if let Layer::SoftmaxOutput { classes } = layer {
            *classes = shape.iter().product();
        }
        shape = layer
            .spec()
            .output_shape(&shape)
            .map_err(|e| Error::Format(format!("checkpoint does not form a network: {e}")))?;
    }
    let norm = Norm {
        center: kv.require_parsed("norm_center")?,
        scale: kv.require_parsed("norm_scale")?,
    };
    let mut net = Network::from_layers(
        &input_shape,
        layers,
        Loss::parse(kv.require("loss")?)?,
        norm,
        kv.require_parsed("seed")?,
    )
    .map_err(|e| Error::Format(format!("checkpoint does not form a network: {e}")))?;
    net.frozen = frozen;
    Ok(net)
}

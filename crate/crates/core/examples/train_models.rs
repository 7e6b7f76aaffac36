//! Trains the three probability models on the same synthetic town and
//! compares holdout accuracy. The network's width and epoch count are chosen
//! by cross-validation.

use parcel_ca::models::{
    build_training_set, train_lr, train_mlp, train_rf, ForestHyper, LogisticHyper, MlpHyper,
    ModelKind,
};
use parcel_ca::subdivision::{subdivide, SubdivisionConfig};
use parcel_ca::synth::{self, TownSpec};

fn main() -> parcel_ca::Result<()> {
    let town = synth::town(&TownSpec::default());
    let cells = subdivide(&town.t0, &SubdivisionConfig::default())?.landscape;
    let features = town.features(&cells, 30.0)?;
    let ts = build_training_set(&features, &cells, &town.t1, 0.7, 5)?;
    println!(
        "{} training rows, {} holdout rows, features {:?}",
        ts.train.len(),
        ts.holdout.len(),
        features.names
    );

    let lr = train_lr(&ts, &LogisticHyper::default())?;
    let mlp = train_mlp(
        &ts,
        &MlpHyper {
            hidden_widths: vec![4, 8],
            folds: 5,
            ..MlpHyper::default()
        },
    )?;
    let rf = train_rf(&ts, &ForestHyper::default())?;

    for m in [&lr, &mlp, &rf] {
        let detail = match &m.kind {
            ModelKind::Mlp { parameters, .. } => format!(
                "width {}, {} epochs, cv loss {:.3}",
                parameters.selected_width,
                parameters.selected_epochs,
                parameters.cv_loss.unwrap_or(f64::NAN)
            ),
            ModelKind::Rf {
                oob_accuracy,
                hyperparameters,
                ..
            } => {
                format!(
                    "{} trees, out-of-bag accuracy {:.3}",
                    hyperparameters.trees,
                    oob_accuracy.unwrap_or(f64::NAN)
                )
            }
            ModelKind::Lr { .. } => String::new(),
        };
        println!(
            "{:>3}: holdout accuracy {:.3}  {detail}",
            m.kind_name(),
            m.holdout_accuracy.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

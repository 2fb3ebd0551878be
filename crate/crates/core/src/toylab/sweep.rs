use serde::{Deserialize, Serialize};

use super::{
    capture_activations, complexity_norms, eval_accuracy, gen_circles, train_mlp, CirclesConfig,
    ComplexityNorms, Hyper, MlpModel, Variant,
};
use crate::analysis::{analyze_with, rank_measures, DiversityReport, MeasureTau, Orientation};
use crate::error::{Error, Result};
use crate::estimators::EstimatorConfig;
use crate::par::{try_map_indexed, Execution};
use crate::tensor_io::ActivationMatrix;

pub const SWEEP_SCHEMA: &str = "actdiag-sweep/1";

/// Which memorisation knob a sweep turns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Shortcut agreement fraction alpha.
    Spurious,
    /// Label reassignment fraction beta.
    Shuffled,
}

impl SweepKind {
    pub fn variant(self, setting: f64) -> Variant {
        match self {
            SweepKind::Spurious => Variant::Spurious { alpha: setting },
            SweepKind::Shuffled => Variant::Shuffled { beta: setting },
        }
    }

    pub fn orientation(self) -> Orientation {
        match self {
            SweepKind::Spurious => Orientation::Heuristic,
            SweepKind::Shuffled => Orientation::ExampleLevel,
        }
    }

    fn knob(self) -> &'static str {
        match self {
            SweepKind::Spurious => "alpha",
            SweepKind::Shuffled => "beta",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerStats {
    pub layer: usize,
    pub width: usize,
    pub mean_entropy: f64,
    pub mean_mi: Option<f64>,
}

/// One trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub setting: f64,
    pub seed: u64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub layers: Vec<LayerStats>,
    pub norms: ComplexityNorms,
}

impl RunRecord {
    pub fn final_layer(&self) -> &LayerStats {
        self.layers
            .last()
            .expect("models have at least one hidden layer")
    }
}

/// Per-setting medians over seeds, final hidden layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingSummary {
    pub setting: f64,
    pub test_accuracy: f64,
    pub mean_entropy: f64,
    pub mean_mi: f64,
    pub two_norm: f64,
    pub frobenius_norm: f64,
    pub path_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub schema: String,
    pub kind: SweepKind,
    pub grid: Vec<f64>,
    pub seeds: Vec<u64>,
    pub hyper: Hyper,
    pub estimator: EstimatorConfig,
    pub data: CirclesConfig,
    /// Runs in grid-major, seed-minor order.
    pub records: Vec<RunRecord>,
    pub settings: Vec<SettingSummary>,
    pub orientation: Orientation,
    /// Kendall tau of each measure's ranking against median test accuracy.
    pub taus: Vec<MeasureTau>,
    /// Measures whose tau is undefined (a constant input).
    pub undefined_taus: Vec<String>,
}

impl SweepResult {
    pub fn tau(&self, measure: &str) -> Option<&MeasureTau> {
        self.taus.iter().find(|t| t.measure == measure)
    }

    /// One row per run.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let n_layers = self.records.first().map_or(0, |r| r.layers.len());
        let mut header: Vec<String> = [
            self.kind.knob(),
            "seed",
            "train_accuracy",
            "test_accuracy",
            "two_norm",
            "frobenius_norm",
            "path_norm",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        for l in 0..n_layers {
            header.push(format!("layer{l}_mean_entropy"));
            header.push(format!("layer{l}_mean_mi"));
        }
        let csv_err = |e: csv::Error| Error::Csv(e.to_string());
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.records {
            let mut row = vec![
                r.setting.to_string(),
                r.seed.to_string(),
                r.train_accuracy.to_string(),
                r.test_accuracy.to_string(),
                r.norms.two_norm.to_string(),
                r.norms.frobenius_norm.to_string(),
                r.norms.path_norm.to_string(),
            ];
            for l in &r.layers {
                row.push(l.mean_entropy.to_string());
                row.push(l.mean_mi.map_or_else(String::new, |v| v.to_string()));
            }
            w.write_record(&row).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

/// A trained model with everything measured on it.
#[derive(Debug, Clone)]
pub struct ToyRun {
    pub record: RunRecord,
    pub model: MlpModel,
    /// Hidden-layer activations on the test set, one matrix per layer.
    pub activations: Vec<ActivationMatrix>,
    pub reports: Vec<DiversityReport>,
}

/// Generates data, trains, evaluates and analyses every hidden layer on the
/// uncorrupted test set. Analysis runs with `exec`.
pub fn run_single(
    data: &CirclesConfig,
    hyper: &Hyper,
    est: &EstimatorConfig,
    setting: f64,
    exec: Execution,
) -> Result<ToyRun> {
    let (train, test) = gen_circles(data)?;
    let model = train_mlp(&train, Some(&test), hyper, data.seed)?;
    let train_accuracy = eval_accuracy(&model, &train)?;
    let test_accuracy = eval_accuracy(&model, &test)?;
    let test_inputs = test.input_matrix()?;

    let mut activations = Vec::with_capacity(model.n_hidden());
    let mut reports = Vec::with_capacity(model.n_hidden());
    let mut layers = Vec::with_capacity(model.n_hidden());
    for layer in 0..model.n_hidden() {
        let acts = capture_activations(&model, &test_inputs, layer)?.with_source(format!(
            "{}-seed{}-layer{layer}",
            data.variant.name(),
            data.seed
        ));
        let report = analyze_with(&acts, est, exec)?;
        layers.push(LayerStats {
            layer,
            width: acts.cols(),
            mean_entropy: report.mean_entropy,
            mean_mi: report.mean_mi,
        });
        activations.push(acts);
        reports.push(report);
    }
    let norms = complexity_norms(&model);
    Ok(ToyRun {
        record: RunRecord {
            setting,
            seed: data.seed,
            train_accuracy,
            test_accuracy,
            layers,
            norms,
        },
        model,
        activations,
        reports,
    })
}

/// Trains one model per (setting, seed), in parallel across runs when
/// `exec` allows, and correlates each measure with test accuracy across
/// settings. `template` supplies everything but the variant and seed.
pub fn run_sweep(
    kind: SweepKind,
    grid: &[f64],
    seeds: &[u64],
    hyper: &Hyper,
    est: &EstimatorConfig,
    template: &CirclesConfig,
    exec: Execution,
) -> Result<SweepResult> {
    if grid.len() < 2 {
        return Err(Error::InvalidConfig(
            "sweep grid needs at least two settings".into(),
        ));
    }
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("sweep needs at least one seed".into()));
    }
    let runs: Vec<(f64, u64)> = grid
        .iter()
        .flat_map(|&g| seeds.iter().map(move |&s| (g, s)))
        .collect();
    let records = try_map_indexed(exec, runs.len(), |idx| {
        let (setting, seed) = runs[idx];
        let data = CirclesConfig {
            variant: kind.variant(setting),
            seed,
            ..template.clone()
        };
        run_single(&data, hyper, est, setting, Execution::Sequential)
            .map(|run| run.record)
            .map_err(|e| e.context(format!("{}={setting} seed={seed}", kind.knob())))
    })?;

    let settings: Vec<SettingSummary> = grid
        .iter()
        .enumerate()
        .map(|(g, &setting)| {
            let rs = &records[g * seeds.len()..(g + 1) * seeds.len()];
            let med = |f: &dyn Fn(&RunRecord) -> f64| median(rs.iter().map(f).collect());
            SettingSummary {
                setting,
                test_accuracy: med(&|r| r.test_accuracy),
                mean_entropy: med(&|r| r.final_layer().mean_entropy),
                mean_mi: med(&|r| r.final_layer().mean_mi.unwrap_or(f64::NAN)),
                two_norm: med(&|r| r.norms.two_norm),
                frobenius_norm: med(&|r| r.norms.frobenius_norm),
                path_norm: med(&|r| r.norms.path_norm),
            }
        })
        .collect();

    let orientation = kind.orientation();
    let (taus, undefined_taus) = measure_taus(&settings, orientation)?;

    Ok(SweepResult {
        schema: SWEEP_SCHEMA.to_string(),
        kind,
        grid: grid.to_vec(),
        seeds: seeds.to_vec(),
        hyper: hyper.clone(),
        estimator: est.clone(),
        data: template.clone(),
        records,
        settings,
        orientation,
        taus,
        undefined_taus,
    })
}

/// Kendall tau of each summarised measure against median test accuracy.
/// Measures that are constant or non-finite across settings are returned by
/// name instead.
pub fn measure_taus(
    settings: &[SettingSummary],
    orientation: Orientation,
) -> Result<(Vec<MeasureTau>, Vec<String>)> {
    let (neg_h, neg_mi) = orientation.negations();
    let accuracy: Vec<f64> = settings.iter().map(|s| s.test_accuracy).collect();
    let column = |f: fn(&SettingSummary) -> f64| settings.iter().map(f).collect::<Vec<_>>();
    let candidates: Vec<(&str, Vec<f64>, bool)> = vec![
        ("mean_entropy", column(|s| s.mean_entropy), neg_h),
        ("mean_mi", column(|s| s.mean_mi), neg_mi),
        // larger norms are read as worse generalisation
        ("two_norm", column(|s| s.two_norm), true),
        ("frobenius_norm", column(|s| s.frobenius_norm), true),
        ("path_norm", column(|s| s.path_norm), true),
    ];
    let mut taus = Vec::new();
    let mut undefined = Vec::new();
    for c in candidates {
        if c.1.iter().any(|v| !v.is_finite()) {
            undefined.push(c.0.to_string());
            continue;
        }
        match rank_measures(&accuracy, std::slice::from_ref(&c)) {
            Ok(mut t) => taus.append(&mut t),
            Err(Error::AllTied) => undefined.push(c.0.to_string()),
            Err(e) => return Err(e),
        }
    }
    Ok((taus, undefined))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

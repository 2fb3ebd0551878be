//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use actdiag::estimators::ksg::{kth_neighbor_radii, mi_prepared, preprocess};
use actdiag::estimators::PreparedColumn;
use actdiag::par::try_map_indexed;
use actdiag::tensor_io::npy::{decode_npy, encode_npy, MAGIC};
use actdiag::toylab::{
    gen_circles, run_single, run_sweep, CirclesConfig, Dataset, Hyper, MlpModel, RunRecord,
    SweepKind, SweepResult, Variant,
};
use actdiag::{
    analyze, analyze_with, digamma, entropy, ksg_mi, ActivationMatrix, DigammaMode, Error,
    EstimatorConfig, Execution, MiMode,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn cores() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

// ---------------------------------------------------------------- 1

fn gaussian_pair(s: usize, rho: f64, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let mut x = Vec::with_capacity(s);
    let mut y = Vec::with_capacity(s);
    for _ in 0..s {
        let a: f64 = StandardNormal.sample(rng);
        let b: f64 = StandardNormal.sample(rng);
        x.push(a);
        y.push(rho * a + (1.0 - rho * rho).sqrt() * b);
    }
    (x, y)
}

fn ksg_accuracy() -> Outcome {
    let cfg = EstimatorConfig {
        mi_mode: MiMode::KsgCanonical,
        ..Default::default()
    };
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for rho in [0.0, 0.5, 0.9f64] {
        let target = -0.5 * (1.0 - rho * rho).ln() + 0.0;
        let mean = (0..10u64)
            .map(|seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
                let (x, y) = gaussian_pair(2000, rho, &mut rng);
                ksg_mi(&x, &y, &cfg).unwrap()
            })
            .sum::<f64>()
            / 10.0;
        let err = (mean - target).abs();
        pass &= err <= 0.05;
        parts.push(format!("rho={rho}: {mean:.4} vs {target:.4}"));
    }
    let elapsed = start.elapsed();
    pass &= elapsed <= Duration::from_secs(5);
    outcome(
        pass,
        format!("{}; {:.2?} (limit 5 s)", parts.join(", "), elapsed),
    )
}

// ---------------------------------------------------------------- 2

fn entropy_plugin() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let u: Vec<f64> = (0..10_000).map(|_| rng.random()).collect();
    let h = entropy(&u, 100).unwrap();
    let target = 100f64.ln();
    let constant = entropy(&[0.37; 500], 100).unwrap();
    outcome(
        (h - target).abs() <= 0.05 && constant == 0.0,
        format!("uniform {h:.4} vs {target:.4}; constant column {constant}"),
    )
}

// ---------------------------------------------------------------- 3

/// Equal-width binning and plug-in entropy, bins visited in order.
fn oracle_entropy(col: &[f64], bins: usize) -> f64 {
    let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut counts = vec![0usize; bins];
    for &v in col {
        let b = if hi > lo {
            (((v - lo) / (hi - lo) * bins as f64) as usize).min(bins - 1)
        } else {
            0
        };
        counts[b] += 1;
    }
    let s = col.len() as f64;
    let mut h = 0.0;
    for &c in &counts {
        if c > 0 {
            let p = c as f64 / s;
            h += p * (1.0 / p).ln();
        }
    }
    h.clamp(0.0, (bins as f64).ln())
}

/// All pairwise Chebyshev distances sorted per sample; returns the k-th
/// radius of every sample and the MI estimate.
fn oracle_mi(x: &[f64], y: &[f64], k: usize, mode: MiMode, dg: DigammaMode) -> (Vec<f64>, f64) {
    let s = x.len();
    let mut radii = Vec::with_capacity(s);
    let mut hist = vec![0u64; s + 1];
    for i in 0..s {
        let mut d: Vec<f64> = (0..s)
            .filter(|&j| j != i)
            .map(|j| (x[i] - x[j]).abs().max((y[i] - y[j]).abs()))
            .collect();
        d.sort_by(f64::total_cmp);
        let eps = d[k - 1];
        radii.push(eps);
        for axis in [x, y] {
            let e = (0..s)
                .filter(|&j| j != i && (axis[i] - axis[j]).abs() < eps)
                .count();
            let arg = match mode {
                MiMode::PaperLiteral => e.max(1),
                MiMode::KsgCanonical => e + 1,
            };
            hist[arg] += 1;
        }
    }
    let mut total = 0.0;
    for (c, &n) in hist.iter().enumerate() {
        if n > 0 {
            total += n as f64 * digamma(c as f64, dg).unwrap();
        }
    }
    let mi = digamma(k as f64, dg).unwrap() + digamma(s as f64, dg).unwrap() - total / s as f64;
    (radii, mi)
}

fn random_matrix(rng: &mut ChaCha8Rng, s: usize, n: usize) -> ActivationMatrix {
    let mut cols = Vec::with_capacity(n);
    for _ in 0..n {
        let col: Vec<f64> = match rng.random_range(0..5) {
            // coarse alphabet: heavy ties
            0 => {
                let levels = rng.random_range(1..5);
                (0..s).map(|_| rng.random_range(0..levels) as f64).collect()
            }
            // rectified Gaussian: a spike at zero
            1 => (0..s)
                .map(|_| StandardNormal.sample(rng))
                .map(|v: f64| v.max(0.0))
                .collect(),
            2 => vec![rng.random::<f64>(); s],
            _ => (0..s).map(|_| StandardNormal.sample(rng)).collect(),
        };
        cols.push(col);
    }
    ActivationMatrix::from_columns(&cols).unwrap()
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = Vec::new();
    let mut pairs_checked = 0usize;
    for trial in 0..100 {
        let k = rng.random_range(1..=5);
        let s = rng.random_range(k + 1..=256);
        let n = rng.random_range(1..=8);
        let m = random_matrix(&mut rng, s, n);
        let cfg = EstimatorConfig {
            k,
            n_bins: rng.random_range(1..=120),
            mi_mode: if rng.random() {
                MiMode::PaperLiteral
            } else {
                MiMode::KsgCanonical
            },
            digamma: if rng.random_bool(0.8) {
                DigammaMode::Exact
            } else {
                DigammaMode::PaperApprox
            },
            normalize: rng.random_bool(0.8),
            jitter: rng.random_bool(0.8),
            seed: rng.random(),
            ..Default::default()
        };
        let report = analyze(&m, &cfg).unwrap();
        let cols = m.columns();
        let post: Vec<Vec<f64>> = cols.iter().map(|c| preprocess(c, &cfg)).collect();
        let prepared: Vec<PreparedColumn> = post
            .iter()
            .cloned()
            .map(PreparedColumn::from_values)
            .collect();

        let entropies: Vec<f64> = cols.iter().map(|c| oracle_entropy(c, cfg.n_bins)).collect();
        if entropies
            .iter()
            .zip(&report.entropy)
            .any(|(a, b)| a.to_bits() != b.to_bits())
        {
            mismatches.push(format!("trial {trial}: entropy"));
        }
        let mean_h = entropies.iter().sum::<f64>() / n as f64;
        if mean_h.to_bits() != report.mean_entropy.to_bits() {
            mismatches.push(format!("trial {trial}: mean entropy"));
        }

        let full = report
            .mi_matrix()
            .expect("small matrices keep the full matrix");
        let mut pair_values = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                pairs_checked += 1;
                let (radii, mi) = oracle_mi(&post[i], &post[j], k, cfg.mi_mode, cfg.digamma);
                pair_values.push(mi);
                if full.get(i, j).to_bits() != mi.to_bits()
                    || full.get(j, i).to_bits() != mi.to_bits()
                {
                    mismatches.push(format!("trial {trial}: analyze MI ({i},{j})"));
                }
                let fast = kth_neighbor_radii(&prepared[i], &prepared[j], k);
                if fast
                    .iter()
                    .zip(&radii)
                    .any(|(a, b)| a.to_bits() != b.to_bits())
                {
                    mismatches.push(format!("trial {trial}: radii ({i},{j})"));
                }
                let fast_mi = mi_prepared(
                    &prepared[i],
                    &prepared[j],
                    k,
                    cfg.mi_mode,
                    cfg.digamma,
                    false,
                );
                if fast_mi.to_bits() != mi.to_bits() {
                    mismatches.push(format!("trial {trial}: fast MI ({i},{j})"));
                }
            }
        }
        let expected_mean = (!pair_values.is_empty()).then(|| {
            pair_values.sort_by(f64::total_cmp);
            pair_values.iter().sum::<f64>() / pair_values.len() as f64
        });
        if expected_mean.map(f64::to_bits) != report.mean_mi.map(f64::to_bits) {
            mismatches.push(format!("trial {trial}: mean MI"));
        }
    }
    let detail = if mismatches.is_empty() {
        format!("100 matrices, {pairs_checked} pairs bit-equal")
    } else {
        format!("{} mismatches, first: {}", mismatches.len(), mismatches[0])
    };
    outcome(mismatches.is_empty(), detail)
}

// ---------------------------------------------------------------- 4

fn group(variant: Variant, hyper: &Hyper) -> Vec<RunRecord> {
    try_map_indexed(Execution::Parallel, SEEDS.len(), |i| {
        let data = CirclesConfig::for_variant(variant, SEEDS[i]);
        run_single(
            &data,
            hyper,
            &EstimatorConfig::default(),
            0.0,
            Execution::Sequential,
        )
        .map(|r| r.record)
    })
    .unwrap()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn hypothesis_separation() -> Outcome {
    let start = Instant::now();
    let base = group(Variant::Base, &Hyper::default());
    let spurious = group(Variant::Spurious { alpha: 1.0 }, &Hyper::default());
    let shuffled = group(Variant::Shuffled { beta: 1.0 }, &Hyper::memorizing());
    let elapsed = start.elapsed();

    let h = |rs: &[RunRecord]| {
        rs.iter()
            .map(|r| r.final_layer().mean_entropy)
            .collect::<Vec<_>>()
    };
    let mi = |rs: &[RunRecord]| {
        rs.iter()
            .map(|r| r.final_layer().mean_mi.unwrap())
            .collect::<Vec<_>>()
    };
    let (hs, hb, hx) = (h(&spurious), h(&base), h(&shuffled));
    let (ms, mb, mx) = (mi(&spurious), mi(&base), mi(&shuffled));

    let count = |f: &dyn Fn(usize) -> bool| (0..5).filter(|&i| f(i)).count();
    let h_low = count(&|i| hs[i] < hb[i]);
    let h_high = count(&|i| hb[i] < hx[i]);
    let h_seeds = count(&|i| hs[i] < hb[i] && hb[i] < hx[i]);
    let mi_low = count(&|i| mx[i] < mb[i]);
    let mi_high = count(&|i| mb[i] < ms[i]);
    let mi_seeds = count(&|i| mx[i] < mb[i] && mb[i] < ms[i]);
    let (mhs, mhb, mhx) = (median(hs), median(hb), median(hx));
    let (mms, mmb, mmx) = (median(ms), median(mb), median(mx));
    let h_ok = mhs < mhb && mhb < mhx && h_seeds >= 4;
    let mi_ok = mmx < mmb && mmb < mms && mi_seeds >= 4;
    let time_ok = elapsed <= Duration::from_secs(600);
    outcome(
        h_ok && mi_ok && time_ok,
        format!(
            "median entropy spurious/base/shuffled {mhs:.3}/{mhb:.3}/{mhx:.3}, seeds with \
             spurious<base {h_low}/5, base<shuffled {h_high}/5, both {h_seeds}/5; \
             median MI shuffled/base/spurious {mmx:.3}/{mmb:.3}/{mms:.3}, seeds with \
             shuffled<base {mi_low}/5, base<spurious {mi_high}/5, both {mi_seeds}/5; \
             {:.0?} on {} cores (limit 10 min)",
            elapsed,
            cores()
        ),
    )
}

// ---------------------------------------------------------------- 5, 6

fn sweep(kind: SweepKind) -> SweepResult {
    let hyper = match kind {
        SweepKind::Spurious => Hyper::default(),
        SweepKind::Shuffled => Hyper::memorizing(),
    };
    let template = CirclesConfig::for_variant(kind.variant(GRID[0]), 0);
    run_sweep(
        kind,
        &GRID,
        &SEEDS,
        &hyper,
        &EstimatorConfig::default(),
        &template,
        Execution::Parallel,
    )
    .unwrap()
}

fn tau(s: &SweepResult, measure: &str) -> Option<f64> {
    s.tau(measure).map(|t| t.tau)
}

fn fmt_tau(t: Option<f64>) -> String {
    t.map_or_else(|| "undefined".into(), |t| format!("{t:.3}"))
}

fn model_selection(alpha: &SweepResult, beta: &SweepResult) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, s) in [("alpha", alpha), ("beta", beta)] {
        let (h, mi) = (tau(s, "mean_entropy"), tau(s, "mean_mi"));
        pass &= h.is_some_and(|t| t >= 0.6) && mi.is_some_and(|t| t >= 0.6);
        let acc: Vec<String> = s
            .settings
            .iter()
            .map(|x| format!("{:.3}", x.test_accuracy))
            .collect();
        parts.push(format!(
            "{name} ({:?}): entropy {} MI {} [accuracy {}]",
            s.orientation,
            fmt_tau(h),
            fmt_tau(mi),
            acc.join(" ")
        ));
    }
    outcome(pass, parts.join("; "))
}

fn norm_contrast(alpha: &SweepResult, beta: &SweepResult) -> Outcome {
    let b = tau(beta, "frobenius_norm");
    let a = tau(alpha, "frobenius_norm");
    outcome(
        b.is_some_and(|t| t.abs() >= 0.6),
        format!(
            "beta Frobenius tau {} (|tau| >= 0.6); alpha Frobenius tau {} (reported only); \
             alpha two-norm {} path {}",
            fmt_tau(b),
            fmt_tau(a),
            fmt_tau(tau(alpha, "two_norm")),
            fmt_tau(tau(alpha, "path_norm")),
        ),
    )
}

// ---------------------------------------------------------------- 7

/// Eight latent factors mixed into 256 rectified neurons.
fn wide_layer(s: usize, n: usize, seed: u64) -> ActivationMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let latent: Vec<Vec<f64>> = (0..s)
        .map(|_| (0..8).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let mix: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..8).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let mut data = Vec::with_capacity(s * n);
    for z in &latent {
        for w in &mix {
            let noise: f64 = StandardNormal.sample(&mut rng);
            let v: f64 = z.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + noise;
            data.push(v.max(0.0));
        }
    }
    ActivationMatrix::new(s, n, data).unwrap()
}

fn performance() -> Outcome {
    let m = wide_layer(2000, 256, 7);
    let cfg = EstimatorConfig {
        force_full_mi: true,
        ..Default::default()
    };
    let mut outputs = Vec::new();
    let mut times = Vec::new();
    for workers in [1, 4, 8] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .unwrap();
        let start = Instant::now();
        let report = pool
            .install(|| analyze_with(&m, &cfg, Execution::Parallel))
            .unwrap();
        times.push((workers, start.elapsed()));
        outputs.push(serde_json::to_vec(&report).unwrap());
    }
    let identical = outputs.windows(2).all(|w| w[0] == w[1]);
    let eight = times[2].1;
    let t: Vec<String> = times
        .iter()
        .map(|(w, d)| format!("{w} workers {d:.1?}"))
        .collect();
    outcome(
        identical && eight <= Duration::from_secs(60),
        format!(
            "32640 pairs; {}; JSON byte-identical: {identical}; {} cores available (limit 60 s)",
            t.join(", "),
            cores()
        ),
    )
}

// ---------------------------------------------------------------- 8

fn header(descr: &str, fortran: bool, shape: &str) -> Vec<u8> {
    let dict = format!(
        "{{'descr': '{descr}', 'fortran_order': {}, 'shape': {shape}, }}",
        if fortran { "True" } else { "False" }
    );
    let mut text = dict.into_bytes();
    while (10 + text.len() + 1) % 64 != 0 {
        text.push(b' ');
    }
    text.push(b'\n');
    let mut out = MAGIC.to_vec();
    out.extend([1, 0]);
    out.extend((text.len() as u16).to_le_bytes());
    out.extend(text);
    out
}

fn format_fidelity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let dir = tempfile::tempdir().unwrap();
    let mut failures = Vec::new();
    for trial in 0..1000 {
        let rows = rng.random_range(1..40);
        let cols = rng.random_range(1..40);
        let data: Vec<f64> = (0..rows * cols)
            .map(|_| match rng.random_range(0..10) {
                0 => -0.0,
                1 => f64::MIN_POSITIVE / 3.0,
                2 => f64::MAX * rng.random::<f64>(),
                _ => StandardNormal.sample(&mut rng),
            })
            .collect();
        let m = ActivationMatrix::new(rows, cols, data).unwrap();
        let bytes = encode_npy(&m);
        let back = decode_npy(&bytes).unwrap();
        let bits = |m: &ActivationMatrix| m.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        let again = encode_npy(&back);
        if again != bytes || bits(&back) != bits(&m) || (back.rows(), back.cols()) != (rows, cols) {
            failures.push(format!("round trip {trial}"));
        }
        if trial % 100 == 0 {
            let path = dir.path().join(format!("t{trial}.npy"));
            actdiag::write_array(&m, &path).unwrap();
            if std::fs::read(&path).unwrap() != bytes
                || actdiag::read_array(&path).unwrap().data() != m.data()
            {
                failures.push(format!("file round trip {trial}"));
            }
        }
    }

    let good =
        encode_npy(&ActivationMatrix::new(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap());
    let header_end = 10 + u16::from_le_bytes([good[8], good[9]]) as usize;
    let mut malformed: Vec<(String, Vec<u8>)> = (0..good.len())
        .map(|cut| (format!("truncated to {cut} bytes"), good[..cut].to_vec()))
        .collect();
    let mut bad_magic = good.clone();
    bad_magic[1] = b'X';
    malformed.push(("bad magic".into(), bad_magic));
    let mut version = good.clone();
    version[6] = 2;
    malformed.push(("version 2.0".into(), version));
    let mut garbled = good.clone();
    garbled[11] = b'[';
    malformed.push(("garbled map".into(), garbled));
    let mut unterminated = good.clone();
    unterminated[header_end - 1] = b' ';
    malformed.push(("header without newline".into(), unterminated));

    let payload = |mut h: Vec<u8>, n: usize| {
        h.extend(std::iter::repeat_n(0u8, n));
        h
    };
    let unsupported = vec![
        ("column-major", payload(header("<f8", true, "(3, 2)"), 48)),
        ("big-endian", payload(header(">f8", false, "(3, 2)"), 48)),
        ("integer dtype", payload(header("<i8", false, "(3, 2)"), 48)),
        ("1-D", payload(header("<f8", false, "(6,)"), 48)),
        ("3-D", payload(header("<f8", false, "(1, 3, 2)"), 48)),
    ];

    let mut rejected = 0;
    for (name, bytes) in &malformed {
        match decode_npy(bytes) {
            Err(Error::MalformedHeader(_)) => rejected += 1,
            other => failures.push(format!("{name}: {other:?}")),
        }
    }
    for (name, bytes) in &unsupported {
        match decode_npy(bytes) {
            Err(Error::UnsupportedLayout(_)) => rejected += 1,
            other => failures.push(format!("{name}: {other:?}")),
        }
    }
    let mut nan = good.clone();
    let at = header_end + 8;
    nan[at..at + 8].copy_from_slice(&f64::NAN.to_le_bytes());
    match decode_npy(&nan) {
        Err(Error::NonFiniteData { row: 0, col: 1 }) => rejected += 1,
        other => failures.push(format!("NaN payload: {other:?}")),
    }
    let total = malformed.len() + unsupported.len() + 1;
    let detail = if failures.is_empty() {
        format!("1000 round trips byte-identical; {rejected}/{total} malformed files rejected as specified")
    } else {
        format!("{} failures, first: {}", failures.len(), failures[0])
    };
    outcome(failures.is_empty(), detail)
}

// ---------------------------------------------------------------- 9

fn gradient_check() -> Outcome {
    let cfg = CirclesConfig {
        n_train: 64,
        ..CirclesConfig::for_variant(Variant::Spurious { alpha: 0.5 }, 9)
    };
    let (train, _): (Dataset, Dataset) = gen_circles(&cfg).unwrap();
    let rows: Vec<usize> = (0..train.len()).collect();
    let hyper = Hyper {
        hidden: vec![12, 8, 6],
        ..Hyper::default()
    };
    let model = MlpModel::init(train.n_features, &hyper, 9);
    let (_, grad) = model.loss_and_grad(&train, &rows);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = rng.random_range(0..model.params.len());
        let mut plus = model.clone();
        plus.params[p] += h;
        let mut minus = model.clone();
        minus.params[p] -= h;
        let fd = (plus.loss(&train, &rows) - minus.loss(&train, &rows)) / (2.0 * h);
        let rel = (fd - grad[p]).abs() / fd.abs().max(grad[p].abs()).max(1e-8);
        worst = worst.max(rel);
    }
    outcome(
        worst <= 1e-4,
        format!(
            "max relative error {worst:.2e} over 100 probes of {} parameters",
            model.params.len()
        ),
    )
}

/// `ACCEPTANCE_ONLY=4,7` runs a subset.
fn selected() -> Option<Vec<usize>> {
    let spec = std::env::var("ACCEPTANCE_ONLY").ok()?;
    Some(
        spec.split(',')
            .filter_map(|s| s.trim().parse().ok())
            .collect(),
    )
}

fn main() -> ExitCode {
    let only = selected();
    let wanted = |id: usize| only.as_ref().is_none_or(|o| o.contains(&id));
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut run = |id: usize, name: &'static str, f: &dyn Fn() -> Outcome| {
        if !wanted(id) {
            return;
        }
        let start = Instant::now();
        let o = f();
        println!(
            "[{}] {id}. {name}: {} ({:.1?})",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed()
        );
        results.push((id, name, o));
    };
    run(1, "KSG accuracy", &ksg_accuracy);
    run(2, "entropy plug-in", &entropy_plugin);
    run(3, "oracle equivalence", &oracle_equivalence);
    run(4, "hypothesis separation", &hypothesis_separation);
    if wanted(5) || wanted(6) {
        let start = Instant::now();
        let alpha = sweep(SweepKind::Spurious);
        let beta = sweep(SweepKind::Shuffled);
        println!("(sweeps: 50 models in {:.1?})", start.elapsed());
        run(5, "model selection", &|| model_selection(&alpha, &beta));
        run(6, "norm baseline contrast", &|| {
            norm_contrast(&alpha, &beta)
        });
    }
    run(7, "performance", &performance);
    run(8, "format fidelity", &format_fidelity);
    run(9, "gradient check", &gradient_check);

    let failed: Vec<String> = results
        .iter()
        .filter(|r| !r.2.pass)
        .map(|r| format!("{} ({})", r.0, r.1))
        .collect();
    println!(
        "acceptance: {}/{} passed{}",
        results.len() - failed.len(),
        results.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!("; failed: {}", failed.join(", "))
        }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

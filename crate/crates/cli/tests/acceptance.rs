//! Acceptance criteria for the clustering engine, one test per criterion.
//!
//! Each test prints a single `[PASS]`/`[FAIL]` line. Run with
//! `cargo test -p obk-cli --test acceptance -- --nocapture --test-threads=1`
//! to see them in order.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use obk_core::eval::{self, preset_data, SweepBase, SweepSpec};
use obk_core::inference::{self, Inferencer};
use obk_core::rng::SeededRng;
use obk_core::vde::{estimate_volumes, BoundingBox};
use obk_core::{
    ClusterModel, DistanceMode, Hyperparams, InferenceParams, Matrix, Method, RunRecord, SweepAxis,
};

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

fn report(id: u32, name: &str, pass: bool, detail: String) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {id}: {name}: {detail}");
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn brute_nearest(points: &[Vec<f64>], x: &[f64]) -> usize {
    let sq = |p: &[f64]| p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    let mut best = 0;
    for i in 1..points.len() {
        if sq(&points[i]) < sq(&points[best]) {
            best = i;
        }
    }
    best
}

#[test]
fn c1_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = SeededRng::new(2024);
    let mut mismatches = 0usize;
    let mut checked = 0usize;
    for _ in 0..50 {
        let k = 1 + rng.below(10) as usize;
        let d = 2 + rng.below(3) as usize;
        let sites: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..d).map(|_| rng.uniform(-10.0, 10.0)).collect())
            .collect();
        let hp = Hyperparams::new(k, 0.6, 0.0).unwrap();
        let model = ClusterModel::init(&hp, &sites).unwrap();
        let projected: Vec<Vec<f64>> = sites.iter().map(|s| s[..d - 1].to_vec()).collect();
        for _ in 0..1000 {
            let x: Vec<f64> = (0..d).map(|_| rng.uniform(-12.0, 12.0)).collect();
            if model.assign(&x).unwrap().cluster_index != brute_nearest(&sites, &x) {
                mismatches += 1;
            }
            let q = &x[..d - 1];
            let want = sites[brute_nearest(&projected, q)][d - 1];
            if inference::infer_euclid(&model, q).unwrap().value != want {
                mismatches += 1;
            }
            checked += 2;
        }
    }
    let elapsed = start.elapsed();
    report(
        1,
        "oracle equivalence",
        mismatches == 0 && elapsed < Duration::from_secs(5),
        format!("{mismatches} mismatches in {checked} checks, {elapsed:.2?}"),
    );
}

fn final_count_var(train: &Matrix, hp: &Hyperparams) -> f64 {
    let rows: Vec<&[f64]> = train.rows().collect();
    let mut m = ClusterModel::init(hp, &rows[..hp.k]).unwrap();
    for r in &rows[hp.k..] {
        m.step(r, hp).unwrap();
    }
    m.var_count()
}

#[test]
fn c2_balance_lowers_count_variance() {
    let mut passes = 0;
    let mut detail = Vec::new();
    for seed in SEEDS {
        let (train, _) = preset_data("normal_2clust", 2, 10_000, 1_000, seed).unwrap();
        let plain = final_count_var(&train, &Hyperparams::new(10, 0.6, 0.0).unwrap());
        let balanced = final_count_var(&train, &Hyperparams::new(10, 0.6, 0.07).unwrap());
        if balanced < plain {
            passes += 1;
        }
        detail.push(format!("seed {seed}: {balanced:.1} vs {plain:.1}"));
    }
    report(
        2,
        "balance property",
        passes == SEEDS.len(),
        format!(
            "{passes}/5 seeds lower with beta=0.07 [{}]",
            detail.join("; ")
        ),
    );
}

fn reference_run(seed: u64) -> (RunRecord, Duration) {
    let start = Instant::now();
    let (train, test) = preset_data("normal", 2, 10_000, 1_000, seed).unwrap();
    let hp = Hyperparams::new(300, 0.6, 0.07).unwrap();
    let run = eval::run_training(
        &train,
        &test,
        &hp,
        &InferenceParams::default(),
        1000,
        "normal",
        seed,
    )
    .unwrap();
    (run.record, start.elapsed())
}

fn reference_runs() -> &'static [(RunRecord, Duration)] {
    static RUNS: std::sync::OnceLock<Vec<(RunRecord, Duration)>> = std::sync::OnceLock::new();
    RUNS.get_or_init(|| SEEDS.iter().map(|&s| reference_run(s)).collect())
}

#[test]
fn c3_loss_descent() {
    let runs = reference_runs();
    let mut passes = 0;
    let mut slowest = Duration::ZERO;
    let mut detail = Vec::new();
    for (r, t) in runs {
        slowest = slowest.max(*t);
        assert_eq!(r.windows.len(), 9);
        let l = r.losses();
        let first = l[..3].iter().sum::<f64>() / 3.0;
        let last = l[6..].iter().sum::<f64>() / 3.0;
        if last < first {
            passes += 1;
        }
        detail.push(format!("seed {}: {first:.2} -> {last:.2}", r.seed));
    }
    report(
        3,
        "loss descent",
        passes == SEEDS.len() && slowest < Duration::from_secs(60),
        format!(
            "{passes}/5 seeds, slowest run {slowest:.2?} [{}]",
            detail.join("; ")
        ),
    );
}

#[test]
fn c4_error_stability() {
    let runs = reference_runs();
    let mut all_ok = true;
    let mut detail = Vec::new();
    for (r, _) in runs {
        let spread = eval::error_spread(r, 4, 9).unwrap();
        let stable = spread.iter().filter(|s| s.max_rel_dev <= 0.25).count();
        for s in &spread {
            if s.std > 0.25 * s.mean {
                println!(
                    "warning: seed {} {} error std {:.3} exceeds 25% of mean {:.3}",
                    r.seed, s.method, s.std, s.mean
                );
            }
        }
        let worst = spread.iter().map(|s| s.max_rel_dev).fold(0.0, f64::max);
        all_ok &= stable >= 6;
        detail.push(format!(
            "seed {}: {stable}/7 (worst dev {:.1}%)",
            r.seed,
            100.0 * worst
        ));
    }
    report(4, "error stability", all_ok, detail.join("; "));
}

fn trained_model() -> (ClusterModel, f64) {
    let (train, test) = preset_data("normal_2clust", 2, 4_000, 100, 11).unwrap();
    let hp = Hyperparams::new(40, 0.6, 0.07).unwrap();
    let run = eval::run_training(
        &train,
        &test,
        &hp,
        &InferenceParams::default(),
        1000,
        "normal_2clust",
        11,
    )
    .unwrap();
    (run.model, run.overall_mean)
}

#[test]
fn c5_weight_normalization() {
    let (model, _) = trained_model();
    let p = InferenceParams {
        cs_beta: 2.5,
        ..Default::default()
    };
    let mut rng = SeededRng::new(5);
    let mut worst_softmax = 0.0f64;
    let mut worst_cs = 0.0f64;
    let mut outside = 0;
    for _ in 0..10_000 {
        let q = [rng.uniform(-4.0, 10.0)];
        let inf = Inferencer::new(&model, &q).unwrap();
        worst_softmax =
            worst_softmax.max((inf.softmax_weights(p.temperature).iter().sum::<f64>() - 1.0).abs());
        let (_, w) = inf.cluster_size_weights(&p).unwrap();
        worst_cs = worst_cs.max((w.iter().sum::<f64>() - 1.0).abs());
        let (nb, _) = inf.cs_exp_weights(&p).unwrap();
        let lasts: Vec<f64> = nb.indices.iter().map(|&i| model.centroid(i)[1]).collect();
        let lo = lasts.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = lasts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let v = inf.cs_exp(&p).unwrap();
        if v < lo - 1e-12 || v > hi + 1e-12 {
            outside += 1;
        }
    }
    report(
        5,
        "weight normalization",
        worst_softmax <= 1e-9 && worst_cs <= 1e-9 && outside == 0,
        format!("max |sum-1| softmax {worst_softmax:.1e}, cluster size {worst_cs:.1e}; {outside} cs_exp estimates outside range"),
    );
}

#[test]
fn c6_merge_linearity() {
    let (model, overall_mean) = trained_model();
    let mut rng = SeededRng::new(6);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let q = [rng.uniform(-4.0, 10.0)];
        let base = InferenceParams::default();
        let eu = inference::infer_euclid(&model, &q).unwrap().value;
        let nw = inference::infer_norm_weights(&model, &q, &base)
            .unwrap()
            .value;
        let cs = inference::infer_cluster_size(&model, &q, &base)
            .unwrap()
            .value;
        for a in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let p = InferenceParams {
                merge_alpha: a,
                ..base
            };
            let all = inference::infer_all(&model, &q, &p, overall_mean).unwrap();
            let get = |m: Method| all.iter().find(|e| e.method == m).unwrap().value;
            for (got, lhs, rhs) in [
                (get(Method::MeanMerge), overall_mean, nw),
                (get(Method::NwcsMerge), nw, cs),
                (get(Method::NwedMerge), nw, eu),
            ] {
                worst = worst.max((got - (a * lhs + (1.0 - a) * rhs)).abs());
            }
        }
    }
    report(
        6,
        "merge linearity",
        worst <= 1e-12,
        format!("max deviation {worst:.1e}"),
    );
}

#[test]
fn c7_vde_normalization() {
    let n = 100_000u64;
    let bbox = BoundingBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
    let est = estimate_volumes(&[vec![-0.5, 0.0], vec![0.5, 0.0]], &bbox, n, 7).unwrap();
    let sigma = bbox.volume() * (n as f64 * 0.25).sqrt() / n as f64;
    let within = est
        .cell_volumes
        .iter()
        .all(|v| (v - 2.0).abs() <= 3.0 * sigma);
    let mass = est.total_mass();
    report(
        7,
        "VDE normalization",
        within && mass == 1.0,
        format!(
            "volumes {:?} (3 sigma = {:.4}), total mass {mass}",
            est.cell_volumes,
            3.0 * sigma
        ),
    );
}

fn obk(dir: &Path, args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_obk"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "obk {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn tree_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push((
                    p.strip_prefix(dir).unwrap().display().to_string(),
                    std::fs::read(&p).unwrap(),
                ));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn c8_cli_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let train = |out: &str| {
        obk(
            dir,
            &[
                "train",
                "--preset",
                "normal",
                "--n",
                "4400",
                "--k",
                "100",
                "--seed",
                "8",
                "--out-dir",
                out,
            ],
        );
    };
    let sweep = |out: &str, jobs: &str| {
        obk(
            dir,
            &[
                "sweep",
                "--preset",
                "uniform_2clust",
                "--axis",
                "k",
                "--values",
                "20:60:20",
                "--seeds",
                "1,2",
                "--n-train",
                "2000",
                "--n-test",
                "200",
                "--window",
                "500",
                "--jobs",
                jobs,
                "--out-dir",
                out,
            ],
        );
    };
    train("t1");
    train("t2");
    sweep("s1", "1");
    sweep("s2", "4");
    let t1 = tree_bytes(&dir.join("t1"));
    let t2 = tree_bytes(&dir.join("t2"));
    let s1 = tree_bytes(&dir.join("s1"));
    let s2 = tree_bytes(&dir.join("s2"));
    report(
        8,
        "determinism",
        t1 == t2 && s1 == s2 && s1.len() == 7,
        format!(
            "train files identical: {}, sweep files identical: {} ({} files)",
            t1 == t2,
            s1 == s2,
            s1.len()
        ),
    );
}

#[test]
fn c9_k_sweep_shape() {
    let spec = SweepSpec {
        axis: SweepAxis::K,
        values: (1..=10).map(|i| 100.0 * i as f64).collect(),
        base: SweepBase {
            hp: Hyperparams::new(300, 0.6, 0.07)
                .unwrap()
                .with_distance(DistanceMode::Euclidean),
            preset: "normal".into(),
            seeds: vec![0],
            ..Default::default()
        },
    };
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let records = eval::sweep_records(&spec, jobs).unwrap();
    let shape_ok = records.len() == 10
        && records.iter().all(|r| {
            r.windows.len() == 9 && r.windows.iter().all(|w| w.per_method_error.len() == 7)
        });
    let summary = eval::summarize(&records, SweepAxis::K).unwrap();
    let errors: Vec<f64> = summary.rows.iter().map(|r| r.best_method().1).collect();
    let min = errors[summary.argmin_error];
    let unique = errors.iter().filter(|&&e| e == min).count() == 1;
    let best = &summary.rows[summary.argmin_error];
    report(
        9,
        "k-sweep shape",
        shape_ok && unique,
        format!(
            "{} records; argmin-error k = {} via {} (reference value from the original experiments: k = 300)",
            records.len(),
            best.value,
            best.best_method().0
        ),
    );
}

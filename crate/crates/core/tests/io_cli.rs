use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use density_order::density::DivergenceKind;
use density_order::io::{load_checkpoint, parse_checkpoint, save_checkpoint, CheckpointMeta};
use density_order::oracle::random_dag;
use density_order::training::EmbeddingTable;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const UNTRAINED_RHO: f64 = 0.2;

fn doe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_doe"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Value of a `key<TAB>value` line.
fn field(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}\t")))
        .unwrap_or_else(|| panic!("no '{key}' in {text}"))
        .to_owned()
}

fn write_edges(path: &Path, edges: &[(String, String)]) {
    let text: String = edges.iter().map(|(c, p)| format!("{c}\t{p}\n")).collect();
    fs::write(path, text).unwrap();
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn checkpoint_round_trip_is_bitwise(
        n in 1usize..6,
        d in 1usize..5,
        seed in any::<u64>(),
        gamma in 0.0..1e3f64,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut wide = |k: usize| -> Vec<f64> {
            (0..k).map(|_| rng.random_range(-1.0..1.0) * 10f64.powi(rng.random_range(-30..30))).collect()
        };
        let table = EmbeddingTable::from_parts(n, d, wide(n * d), wide(n * d)).unwrap();
        let names: Vec<String> = (0..n).map(|i| format!("syn_{i}.n.01")).collect();
        let meta = CheckpointMeta { kind: DivergenceKind::renyi(0.25).unwrap(), gamma, seed };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        save_checkpoint(&path, &names, &table, &meta).unwrap();
        let back = load_checkpoint(&path).unwrap();
        prop_assert_eq!(&back.names, &names);
        prop_assert_eq!(back.meta, meta);
        prop_assert_eq!(back.meta.gamma.to_bits(), gamma.to_bits());
        for (a, b) in back.table.means().iter().zip(table.means()).chain(back.table.log_vars().iter().zip(table.log_vars())) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

#[test]
fn malformed_checkpoints_are_rejected() {
    let table = EmbeddingTable::from_parts(2, 1, vec![0.5, -0.5], vec![0.0, 1.0]).unwrap();
    let meta = CheckpointMeta {
        kind: DivergenceKind::Kl,
        gamma: 1.0,
        seed: 3,
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    save_checkpoint(&path, &["a".into(), "b".into()], &table, &meta).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let truncated: String = text.lines().take(2).map(|l| format!("{l}\n")).collect();
    assert!(parse_checkpoint(&truncated).is_err());
    assert!(parse_checkpoint(&text.replacen("DOE1", "DOE9", 1)).is_err());
    assert!(parse_checkpoint(&text.replace("0.5", "NaN")).is_err());
    assert!(save_checkpoint(&path, &["a b".into(), "c".into()], &table, &meta).is_err());
}

#[test]
fn closure_command_on_chain() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("chain.tsv");
    fs::write(&edges, "c\ta\na\tr\n").unwrap();
    let out = dir.path().join("closure.tsv");
    let o = doe(&["closure", "--edges", s(&edges), "--out", s(&out)]);
    assert!(o.status.success());
    assert_eq!(field(&stdout(&o), "pairs"), "3");
    assert_eq!(field(&stdout(&o), "nodes"), "3");
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 3);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(doe(&["closure", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(doe(&["--help"]).status.code(), Some(0));
    let missing = dir.path().join("absent.tsv");
    assert_ne!(doe(&["closure", "--edges", s(&missing)]).status.code(), Some(0));
    let bad = dir.path().join("bad.tsv");
    fs::write(&bad, "a\tb\tc\n").unwrap();
    let o = doe(&["closure", "--edges", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.tsv:1:"));
    let cyclic = dir.path().join("cycle.tsv");
    fs::write(&cyclic, "a\tb\nb\ta\n").unwrap();
    assert_eq!(doe(&["closure", "--edges", s(&cyclic)]).status.code(), Some(2));
    let edges = dir.path().join("e.tsv");
    fs::write(&edges, "c\ta\na\tr\n").unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "margin = 2\nbogus_key = 1\n").unwrap();
    let o = doe(&["train", "--config", s(&cfg), "--edges", s(&edges), "--out-dir", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    let o = doe(&["train", "--margin", "-1", "--edges", s(&edges), "--out-dir", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
}

fn toy_data(dir: &Path) -> std::path::PathBuf {
    let edges = random_dag(40, 0.1, &mut ChaCha8Rng::seed_from_u64(11));
    let path = dir.join("edges.tsv");
    write_edges(&path, &edges);
    path
}

#[test]
fn train_is_deterministic_and_config_driven() {
    let dir = tempfile::tempdir().unwrap();
    let edges = toy_data(dir.path());
    let o = doe(&["split", "--edges", s(&edges), "--out-dir", s(dir.path()), "--n-val", "20", "--n-test", "20", "--seed", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let cfg = dir.path().join("run.conf");
    fs::write(
        &cfg,
        "# toy run\nmargin = 10\ninit-var = 0.5\ngamma = 1\ndim = 3\nepochs = 4\nbatch_size = 32\nlr = 0.05\n",
    )
    .unwrap();
    let val = dir.path().join("val.tsv");
    let test = dir.path().join("test.tsv");
    let mut metrics = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let o = doe(&[
            "train", "--config", s(&cfg), "--edges", s(&edges), "--val", s(&val), "--exclude", s(&val),
            "--exclude", s(&test), "--out-dir", s(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let text = fs::read_to_string(out.join("metrics.tsv")).unwrap();
        assert_eq!(text.lines().next(), Some("epoch\ttrain_loss\tval_accuracy"));
        assert_eq!(text.lines().count(), 5);
        metrics.push(text);
    }
    assert_eq!(metrics[0], metrics[1]);
    assert_eq!(
        fs::read_to_string(dir.path().join("a/model.ckpt")).unwrap(),
        fs::read_to_string(dir.path().join("b/model.ckpt")).unwrap()
    );
    // a flag overrides the file
    let out = dir.path().join("c");
    let o = doe(&["train", "--config", s(&cfg), "--epochs", "2", "--edges", s(&edges), "--out-dir", s(&out)]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(out.join("metrics.tsv")).unwrap().lines().count(), 3);

    let o = doe(&["eval-hypernym", "--checkpoint", s(&dir.path().join("a/model.ckpt")), "--val", s(&val), "--test", s(&test)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let acc: f64 = field(&stdout(&o), "test_accuracy").parse().unwrap();
    assert!((0.0..=1.0).contains(&acc));
}

#[test]
fn sweep_emits_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let edges = toy_data(dir.path());
    let out = dir.path().join("sweep.tsv");
    let o = doe(&[
        "sweep", "--edges", s(&edges), "--n-val", "10", "--n-test", "10", "--epochs", "1", "--dim", "2",
        "--init-var", "0.5", "--margins", "5,10", "--gammas", "0,1", "--kinds", "kl,elk",
        "--negs", "s1;s1,s2,s4", "--out", s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2 * 2 * 2 * 2);
    let header_fields = text.lines().next().unwrap().split('\t').count();
    for r in &rows {
        assert_eq!(r.split('\t').count(), header_fields);
    }
}

#[test]
fn sweep_keeps_failed_cells() {
    let dir = tempfile::tempdir().unwrap();
    let edges = toy_data(dir.path());
    let out = dir.path().join("sweep.tsv");
    // a huge learning rate with a tiny variance overflows for some cells
    let o = doe(&[
        "sweep", "--edges", s(&edges), "--n-val", "10", "--n-test", "10", "--epochs", "3", "--dim", "2",
        "--lr", "1e6", "--init-vars", "1e-30,0.5", "--out", s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.contains("\tfailed: "), "{text}");
    assert!(text.contains("\tok\t"), "{text}");
}

#[test]
fn untrained_model_is_uncorrelated_with_gold() {
    let dir = tempfile::tempdir().unwrap();
    let edges = toy_data(dir.path());
    let out = dir.path().join("m");
    let o = doe(&["train", "--epochs", "0", "--dim", "10", "--seed", "4", "--edges", s(&edges), "--out-dir", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (mut graded, mut map) = (String::new(), String::new());
    for w in 0..60 {
        let syns: Vec<String> = (0..rng.random_range(1..3)).map(|_| format!("n{}", rng.random_range(0..40))).collect();
        writeln!(map, "w{w}\t{}", syns.join(",")).unwrap();
    }
    for _ in 0..800 {
        let (a, b) = (rng.random_range(0..62), rng.random_range(0..62));
        writeln!(graded, "w{a}\tw{b}\t{:.2}", rng.random_range(0.0..6.0)).unwrap();
    }
    let (gp, mp, sp) = (dir.path().join("g.tsv"), dir.path().join("map.tsv"), dir.path().join("scores.tsv"));
    fs::write(&gp, graded).unwrap();
    fs::write(&mp, map).unwrap();
    let o = doe(&[
        "eval-hyperlex", "--checkpoint", s(&out.join("model.ckpt")), "--graded", s(&gp), "--synsets", s(&mp),
        "--scores-out", s(&sp),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rho: f64 = field(&stdout(&o), "spearman_rho").parse().unwrap();
    assert!(rho.abs() < UNTRAINED_RHO, "rho = {rho}");
    let missing: usize = field(&stdout(&o), "missing").parse().unwrap();
    assert!(missing > 0, "words w60 and w61 have no synsets");
    assert_eq!(fs::read_to_string(&sp).unwrap().lines().count(), 801);
}

#[test]
fn inspect_prints_matrix_and_runs_battery() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("e.tsv");
    fs::write(&edges, "a\tr\nb\tr\nc\ta\nd\ta\n").unwrap();
    let out = dir.path().join("m");
    assert!(doe(&["train", "--epochs", "0", "--dim", "2", "--edges", s(&edges), "--out-dir", s(&out)]).status.success());
    let o = doe(&["inspect", "--checkpoint", s(&out.join("model.ckpt")), "--nodes", "r,a,c", "--threshold", "1e9"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("node\tr\ta\tc"));
    assert!(text.contains('*'));
    let o = doe(&["inspect", "--checkpoint", s(&out.join("model.ckpt")), "--nodes", "r,zz"]);
    assert_ne!(o.status.code(), Some(0));

    let o = doe(&["inspect", "--verify", "--verify-seed", "3"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
}

use std::path::Path;
use std::process::{Command, Output};

use trajgraph::io::load_trajectories;

fn trajgraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trajgraph"))
        .args(args)
        .env_remove("TRAJGRAPH_WORKERS")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_is_deterministic_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    for out in [&a, &b] {
        let o = trajgraph(&["simulate", "--model", "fbm", "--alpha", "0.5", "--n", "100", "--count", "10", "--seed", "7", "--out", path(out)]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let records = load_trajectories(&a).unwrap();
    assert_eq!(records.len(), 10);
    assert!(records.iter().all(|(h, t)| h.n == 100 && t.len() == 100 && h.dim == 3));
    assert!(dir.path().join("a.txt.config.toml").exists());

    let seg = dir.path().join("seg.txt.gz");
    let o = trajgraph(&["simulate", "--model", "seg:fbm:attm:0.25", "--alpha", "0.7", "--n", "80", "--count", "3", "--out", path(&seg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let records = load_trajectories(&seg).unwrap();
    assert_eq!(records[0].0.segment.unwrap().fraction_first, 0.25);
}

#[test]
fn help_lists_every_flag_and_unknown_flags_fail() {
    let expected: &[(&str, &[&str])] = &[
        ("simulate", &["--model", "--alpha", "--n", "--dim", "--count", "--noise", "--seed", "--out", "--workers", "--config"]),
        ("train", &["--preset", "--budget", "--batch-size", "--lr0", "--lr-floor", "--task", "--val-every", "--val-size", "--n-min", "--n-max", "--noise-min", "--noise-max", "--dim", "--models", "--clip", "--out", "--seed", "--workers"]),
        ("eval", &["--checkpoint", "--count", "--chunk", "--grid", "--predictions", "--out", "--n-min", "--noise-max", "--seed"]),
        ("infer", &["--checkpoint", "--input", "--out", "--clip"]),
        ("export-latent", &["--checkpoint", "--input", "--out", "--clip"]),
    ];
    for (cmd, flags) in expected {
        let o = trajgraph(&[cmd, "--help"]);
        assert!(o.status.success());
        let help = String::from_utf8_lossy(&o.stdout);
        for f in *flags {
            assert!(help.contains(f), "{cmd} --help lacks {f}");
        }
    }
    let o = trajgraph(&["simulate", "--out", "x.txt", "--frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error kind=usage"));
}

#[test]
fn pipeline_train_eval_infer_export() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let o = trajgraph(&[
        "train", "--preset", "tiny", "--budget", "256", "--batch-size", "32", "--val-size", "64", "--n-max", "60", "--seed", "4", "--out", path(&run),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let ckpt = run.join("model.tgck");
    assert!(ckpt.exists() && run.join("train_log.csv").exists() && run.join("resolved_config.toml").exists());

    let ev = dir.path().join("eval");
    let o = trajgraph(&[
        "eval", "--checkpoint", path(&ckpt), "--count", "200", "--noise-max", "1", "--grid", "length,noise", "--predictions", "--out", path(&ev),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    let block: Vec<&str> = stdout
        .lines()
        .skip_while(|l| *l != "[length_noise_accuracy]")
        .take_while(|l| *l != "[end]")
        .collect();
    // Header row plus 6 length bins, each with 5 noise bins.
    assert_eq!(block.len(), 1 + 1 + 6, "{stdout}");
    assert!(block[2..].iter().all(|row| row.split(',').count() == 1 + 5));
    let metrics = std::fs::read_to_string(ev.join("metrics.txt")).unwrap();
    assert!(metrics.starts_with("count=200\n"));
    assert_eq!(std::fs::read_to_string(ev.join("predictions.csv")).unwrap().lines().count(), 201);
    assert!(ev.join("grid_length_noise_accuracy.csv").exists());

    // Unlabelled input: header fields left empty.
    let input = dir.path().join("unlabelled.txt");
    let mut text = String::new();
    for (i, n) in [12usize, 40, 7].iter().enumerate() {
        text.push_str(&format!(",,,{n},3,\n"));
        for t in 0..*n {
            let x = (t * (i + 1)) as f64 * 0.1;
            text.push_str(&format!("{x},{},{}\n", x.sin(), (t % 3) as f64));
        }
    }
    std::fs::write(&input, text).unwrap();
    let pred = dir.path().join("pred.csv");
    let o = trajgraph(&["infer", "--checkpoint", path(&ckpt), "--input", path(&input), "--out", path(&pred)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows: Vec<String> = std::fs::read_to_string(&pred).unwrap().lines().map(String::from).collect();
    assert_eq!(rows.len(), 1 + 3);
    assert!(rows[0].starts_with("index,N,pred_model,pred_alpha,p_attm"));
    assert!(rows[2].starts_with("1,40,"));

    let lat = dir.path().join("latent.csv");
    let o = trajgraph(&["export-latent", "--checkpoint", path(&ckpt), "--input", path(&input), "--out", path(&lat)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&lat).unwrap().lines().count(), 1 + 3);

    // Malformed file: exit 2 with the offending line.
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "fbm,0.5,0,3,3,1\n0,0,0\n1,oops,0\n2,2,2\n").unwrap();
    let o = trajgraph(&["infer", "--checkpoint", path(&ckpt), "--input", path(&bad), "--out", path(&pred)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line=3"), "{}", stderr(&o));

    // Dimension mismatch between data and checkpoint: exit 3.
    let flat = dir.path().join("flat.txt");
    let o = trajgraph(&["simulate", "--model", "bm", "--alpha", "1", "--dim", "2", "--count", "2", "--out", path(&flat)]);
    assert!(o.status.success());
    let o = trajgraph(&["infer", "--checkpoint", path(&ckpt), "--input", path(&flat), "--out", path(&pred)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("error kind=mismatch"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "seed = 9\n[simulate]\nmodel = \"sbm\"\nalpha = 1.2\nn = 30\ncount = 4\n").unwrap();
    let out = dir.path().join("s.txt");
    let o = trajgraph(&["simulate", "--config", path(&cfg), "--count", "2", "--out", path(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let records = load_trajectories(&out).unwrap();
    assert_eq!(records.len(), 2);
    assert_eq!(records[0].0.n, 30);
    let resolved = std::fs::read_to_string(dir.path().join("s.txt.config.toml")).unwrap();
    assert!(resolved.contains("seed = 9") && resolved.contains("count = 2"));

    std::fs::write(&cfg, "[simulate]\nmodle = \"sbm\"\n").unwrap();
    let o = trajgraph(&["simulate", "--config", path(&cfg), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(3));
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fsevideo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fsevideo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = fsevideo(args);
    assert!(
        out.status.success(),
        "fsevideo {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    fsevideo(args).status.code().expect("exited normally")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_pgm(path: &Path, w: usize, h: usize, value: u8) {
    let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
    bytes.extend(std::iter::repeat_n(value, w * h));
    fs::write(path, bytes).unwrap();
}

fn pgm_files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "pgm"))
        .map(|p| {
            let bytes = fs::read(&p).unwrap();
            (p.file_name().unwrap().into(), bytes)
        })
        .collect();
    files.sort();
    files
}

/// Synthesizes and samples a small translating sequence under `root`.
fn sampled_sequence(root: &Path, rate: &str, frames: usize) -> (PathBuf, PathBuf, PathBuf) {
    let gt = root.join("gt");
    let sampled = root.join("sampled");
    let n = frames.to_string();
    ok(&[
        "synthesize",
        "--kind",
        "translate",
        "--rate",
        rate,
        "--frames",
        &n,
        "--width",
        "64",
        "--height",
        "64",
        "--seed",
        "4",
        "--out",
        p(&gt),
    ]);
    ok(&[
        "simulate",
        "--input",
        p(&gt),
        "--out",
        p(&sampled),
        "--seed",
        "9",
    ]);
    (gt, sampled.clone(), sampled.join("mask.txt"))
}

#[test]
fn constant_video_is_recovered_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let gt = dir.path().join("gt");
    fs::create_dir(&gt).unwrap();
    for t in 0..3 {
        write_pgm(&gt.join(format!("frame_{t:05}.pgm")), 40, 32, 150);
    }
    let sampled = dir.path().join("sampled");
    let sf = dir.path().join("sf");
    let eval = dir.path().join("eval");
    ok(&[
        "simulate",
        "--input",
        p(&gt),
        "--out",
        p(&sampled),
        "--seed",
        "1",
    ]);
    ok(&[
        "reconstruct-sf",
        "--input",
        p(&sampled),
        "--mask",
        p(&sampled.join("mask.txt")),
        "--out",
        p(&sf),
    ]);
    let stdout = ok(&[
        "evaluate",
        "--reference",
        p(&gt),
        "--test",
        p(&sf),
        "--out",
        p(&eval),
    ]);
    assert_eq!(stdout.trim(), "mean_psnr = inf");
    let csv = fs::read_to_string(eval.join("psnr.csv")).unwrap();
    assert_eq!(
        csv,
        "t,psnr,mse\n0,inf,0.000000\n1,inf,0.000000\n2,inf,0.000000\n"
    );
    for d in [&sampled, &sf, &eval] {
        assert!(d.join("manifest.txt").exists());
    }
}

#[test]
fn zero_support_frames_match_single_frame() {
    let dir = tempfile::tempdir().unwrap();
    let (_, sampled, mask) = sampled_sequence(dir.path(), "1,-1", 4);
    let sf = dir.path().join("sf");
    let mf = dir.path().join("mf");
    ok(&[
        "reconstruct-sf",
        "--input",
        p(&sampled),
        "--mask",
        p(&mask),
        "--out",
        p(&sf),
    ]);
    ok(&[
        "reconstruct-mf",
        "--input",
        p(&sampled),
        "--mask",
        p(&mask),
        "--out",
        p(&mf),
        "--n-support",
        "0",
    ]);
    assert_eq!(pgm_files(&sf), pgm_files(&mf));
    let report = fs::read_to_string(mf.join("report.csv")).unwrap();
    assert!(report
        .lines()
        .skip(1)
        .all(|l| l.starts_with(|c: char| c.is_ascii_digit()) && l.contains(",0,0,0,0,")));
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let (_, sampled, mask) = sampled_sequence(dir.path(), "1,-1", 5);
    let mut runs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("mf{threads}"));
        let mv = dir.path().join(format!("mv{threads}.csv"));
        ok(&[
            "--threads",
            threads,
            "reconstruct-mf",
            "--input",
            p(&sampled),
            "--mask",
            p(&mask),
            "--out",
            p(&out),
            "--n-support",
            "2",
            "--mv-dump",
            p(&mv),
        ]);
        runs.push((
            pgm_files(&out),
            fs::read(out.join("report.csv")).unwrap(),
            fs::read(&mv).unwrap(),
        ));
    }
    assert_eq!(runs[0], runs[1]);
    let mv = String::from_utf8(runs[0].2.clone()).unwrap();
    assert!(mv.starts_with("frame_pair,m,n,dm,dn,cost\n"));
    assert!(mv.lines().count() > 1);
}

#[test]
fn sweep_gain_grows_with_support_frames() {
    let dir = tempfile::tempdir().unwrap();
    let (gt, sampled, mask) = sampled_sequence(dir.path(), "1,0", 12);
    let out = dir.path().join("sweep");
    let stdout = ok(&[
        "sweep",
        "--reference",
        p(&gt),
        "--input",
        p(&sampled),
        "--mask",
        p(&mask),
        "--out",
        p(&out),
        "--n",
        "1..8",
        "--plot-data",
    ]);
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(stdout, summary);
    let gains: Vec<f64> = summary
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(gains.len(), 8);
    assert!(gains[0] > 0.0, "{gains:?}");
    assert!(gains.windows(2).all(|g| g[1] >= g[0]), "{gains:?}");
    assert!(out.join("gain_vs_n.dat").exists());
    assert!(out.join("gain_per_frame_n8.dat").exists());
    assert!(out.join("report_n2.csv").exists());
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("n_values = 1,2,3,4,5,6,7,8\n"));
    assert!(manifest.contains("decay_rho = 0.7\n"));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let (_, sampled, mask) = sampled_sequence(dir.path(), "1,-1", 2);
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "# quick\niterations = 20\nodc_gamma = 0.25\n").unwrap();
    let out = dir.path().join("sf");
    ok(&[
        "reconstruct-sf",
        "--input",
        p(&sampled),
        "--mask",
        p(&mask),
        "--out",
        p(&out),
        "--config",
        p(&cfg),
        "--iterations",
        "30",
    ]);
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("iterations = 30\n"));
    assert!(manifest.contains("odc_gamma = 0.25\n"));
}

#[test]
fn errors_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing");
    let out = dir.path().join("out");

    assert_eq!(code(&["simulate"]), 2);
    assert_eq!(
        code(&["synthesize", "--kind", "shear", "--out", p(&out)]),
        2
    );
    assert_eq!(
        code(&["simulate", "--input", p(&missing), "--out", p(&out)]),
        3
    );

    let bad = dir.path().join("bad");
    fs::create_dir(&bad).unwrap();
    fs::write(bad.join("frame_00000.pgm"), b"P6\n2 2\n255\n").unwrap();
    assert_eq!(code(&["simulate", "--input", p(&bad), "--out", p(&out)]), 5);

    let (_, sampled, _) = sampled_sequence(dir.path(), "1,-1", 1);
    let small = dir.path().join("small");
    fs::create_dir(&small).unwrap();
    write_pgm(&small.join("frame_00000.pgm"), 8, 8, 0);
    ok(&[
        "simulate",
        "--input",
        p(&small),
        "--out",
        p(&dir.path().join("small_sampled")),
    ]);
    let other_mask = dir.path().join("small_sampled").join("mask.txt");
    assert_eq!(
        code(&[
            "reconstruct-sf",
            "--input",
            p(&sampled),
            "--mask",
            p(&other_mask),
            "--out",
            p(&out)
        ]),
        6
    );

    let cfg = dir.path().join("bad.conf");
    fs::write(&cfg, "decay_rho = 2\n").unwrap();
    assert_eq!(
        code(&[
            "reconstruct-sf",
            "--input",
            p(&sampled),
            "--mask",
            p(&other_mask),
            "--out",
            p(&out),
            "--config",
            p(&cfg)
        ]),
        2
    );
}

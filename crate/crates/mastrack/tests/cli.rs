use std::path::Path;
use std::process::{Command, Output};

fn mastrack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mastrack"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn row(stdout: &[u8], key: &str) -> f64 {
    let text = String::from_utf8_lossy(stdout);
    text.lines()
        .find_map(|l| {
            let mut it = l.split_whitespace();
            (it.next() == Some(key)).then(|| it.next().unwrap().parse().unwrap())
        })
        .unwrap_or_else(|| panic!("no {key} row in:\n{text}"))
}

fn small_scene(dir: &Path) {
    let out = mastrack(&[
        "synth",
        "-o",
        s(dir),
        "--seed",
        "5",
        "--set",
        "n_objects=6",
        "--set",
        "n_frames=25",
        "--set",
        "width=200",
        "--set",
        "height=160",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn eval_of_truth_against_itself_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    small_scene(dir.path());
    let gt = dir.path().join("gt.csv");
    let report = dir.path().join("report.csv");
    let out = mastrack(&["eval", s(&gt), s(&gt), "-o", s(&report)]);
    assert!(out.status.success());
    assert_eq!(row(&out.stdout, "MOTA"), 1.0);
    assert_eq!(row(&out.stdout, "IDSW"), 0.0);
    let csv = std::fs::read_to_string(&report).unwrap();
    assert!(csv.starts_with("DR,FA,"));
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn missing_input_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let nowhere = dir.path().join("absent.csv");
    let out = mastrack(&["eval", s(&nowhere), s(&nowhere)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.csv"));
    let out = mastrack(&["track", s(&nowhere), "-o", s(&dir.path().join("t.csv"))]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn bad_configuration_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "# header\nbatch_length=50\n").unwrap();
    let gt = dir.path().join("gt.csv");
    std::fs::write(&gt, "frame,track_id,x,y\n1,1,2.0,3.0\n").unwrap();
    let out = mastrack(&["eval", s(&gt), s(&gt), "-c", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::write(&cfg, "batch_length=20\nno equals sign\n").unwrap();
    let out = mastrack(&["eval", s(&gt), s(&gt), "-c", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.cfg:2"));
    let out = mastrack(&["eval", s(&gt), s(&gt), "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn detect_track_and_pipeline_agree_and_repeat() {
    let dir = tempfile::tempdir().unwrap();
    small_scene(dir.path());
    let frames = dir.path().join("frames");
    let det = dir.path().join("det.csv");
    assert!(mastrack(&["detect", s(&frames), "-o", s(&det)])
        .status
        .success());

    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let lp = dir.path().join("lp");
    let forest = dir.path().join("forest.csv");
    let out = mastrack(&[
        "track",
        s(&det),
        "-o",
        s(&a),
        "--dump-lp",
        s(&lp),
        "--dump-forest",
        s(&forest),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(mastrack(&["track", s(&det), "-o", s(&b)]).status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(lp.join("batch_00020.lp").is_file());
    assert!(std::fs::read_to_string(&forest)
        .unwrap()
        .starts_with("frame,tree_id,leaves,best_S"));

    let overlay = dir.path().join("overlay");
    let c = dir.path().join("c.csv");
    let out = mastrack(&["track", s(&frames), "-o", s(&c), "--overlay", s(&overlay)]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
    assert_eq!(std::fs::read_dir(&overlay).unwrap().count(), 25);

    let run = dir.path().join("run");
    let out = mastrack(&[
        "pipeline",
        s(&frames),
        s(&dir.path().join("gt.csv")),
        "-o",
        s(&run),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        std::fs::read(&a).unwrap(),
        std::fs::read(run.join("tracks.csv")).unwrap()
    );
    assert!(row(&out.stdout, "MOTA") > 0.5);
    assert!(std::fs::read_to_string(run.join("timing.txt"))
        .unwrap()
        .contains("per frame"));
}

#[test]
fn overlay_needs_images() {
    let dir = tempfile::tempdir().unwrap();
    let det = dir.path().join("det.csv");
    std::fs::write(
        &det,
        "frame,index,x,y,area,mean_intensity\n1,1,2.0,3.0,4,9.0\n",
    )
    .unwrap();
    let out = mastrack(&[
        "track",
        s(&det),
        "-o",
        s(&dir.path().join("t.csv")),
        "--overlay",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
}
